#include "token_codec.hpp"

#include <cmath>

namespace psidit {

Tensor patchify(const ImageGrid& image, int patch) {
    if (patch < 1) fail(ErrorCode::invalid_arg, "patchify: patch size < 1");
    if (image.h % patch != 0 || image.w % patch != 0)
        fail(ErrorCode::invalid_arg, "patchify: image dims not divisible by patch size");
    const int ph = image.h / patch, pw = image.w / patch;
    const int token_dim = patch * patch * image.c;
    Tensor out({ph * pw, token_dim});
    for (int py = 0; py < ph; ++py)
        for (int px = 0; px < pw; ++px) {
            float* tok = out.data() + static_cast<int64_t>(py * pw + px) * token_dim;
            int j = 0;
            for (int dy = 0; dy < patch; ++dy)
                for (int dx = 0; dx < patch; ++dx)
                    for (int ch = 0; ch < image.c; ++ch) tok[j++] = image.at(py * patch + dy, px * patch + dx, ch);
        }
    return out;
}

ImageGrid unpatchify(const Tensor& tokens, const PatchGeometry& geom) {
    if (tokens.rank() != 2) fail(ErrorCode::shape_mismatch, "unpatchify expects [N, P*P*C]");
    const int ph = geom.h / geom.patch, pw = geom.w / geom.patch;
    if (tokens.dim(0) != ph * pw || tokens.dim(1) != geom.token_dim())
        fail(ErrorCode::shape_mismatch, "unpatchify: tokens do not match geometry");
    ImageGrid out(geom.h, geom.w, geom.c);
    for (int py = 0; py < ph; ++py)
        for (int px = 0; px < pw; ++px) {
            const float* tok = tokens.data() + static_cast<int64_t>(py * pw + px) * geom.token_dim();
            int j = 0;
            for (int dy = 0; dy < geom.patch; ++dy)
                for (int dx = 0; dx < geom.patch; ++dx)
                    for (int ch = 0; ch < geom.c; ++ch)
                        out.at(py * geom.patch + dy, px * geom.patch + dx, ch) = tok[j++];
        }
    return out;
}

Tensor embed_caption(const std::vector<int>& ids, const Tensor& table) {
    if (table.rank() != 2) fail(ErrorCode::shape_mismatch, "embed_caption: table must be [V,D]");
    const int V = table.dim(0), D = table.dim(1);
    Tensor out({static_cast<int>(ids.size()), D});
    for (size_t i = 0; i < ids.size(); ++i) {
        int id = ids[i];
        if (id < 0 || id >= V) fail(ErrorCode::invalid_arg, "embed_caption: id out of vocabulary");
        std::copy(table.data() + static_cast<int64_t>(id) * D, table.data() + static_cast<int64_t>(id + 1) * D,
                  out.data() + static_cast<int64_t>(i) * D);
    }
    return out;
}

template <class S>
TensorT<S> timestep_embed(double tau, int D) {
    if (tau < 0.0 || tau > 1.0) fail(ErrorCode::invalid_arg, "timestep_embed: tau out of [0,1]");
    if (D < 2 || D % 2 != 0) fail(ErrorCode::invalid_arg, "timestep_embed: D must be even and >= 2");
    const int half = D / 2;
    TensorT<S> out({D});
    const double t = tau * 1000.0;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
        out.v[static_cast<size_t>(i)] = static_cast<S>(std::cos(t * freq));
        out.v[static_cast<size_t>(half + i)] = static_cast<S>(std::sin(t * freq));
    }
    return out;
}

template TensorT<float> timestep_embed<float>(double, int);
template TensorT<double> timestep_embed<double>(double, int);

}  // namespace psidit
