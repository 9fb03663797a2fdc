#include "image.hpp"

#include <algorithm>
#include <cmath>

namespace psidit {

namespace {

inline int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

// Keys cubic kernel, a = -0.5
inline double cubic_weight(double x) {
    x = std::abs(x);
    if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
    if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
    return 0.0;
}

}  // namespace

ImageGrid bilinear_resize(const ImageGrid& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) fail(ErrorCode::invalid_arg, "bilinear_resize: bad output size");
    ImageGrid out(out_h, out_w, img.c);
    const double sy = static_cast<double>(img.h) / out_h;
    const double sx = static_cast<double>(img.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int ya = clampi(y0, 0, img.h - 1), yb = clampi(y0 + 1, 0, img.h - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int xa = clampi(x0, 0, img.w - 1), xb = clampi(x0 + 1, 0, img.w - 1);
            for (int ch = 0; ch < img.c; ++ch) {
                double top = (1.0 - wx) * img.at(ya, xa, ch) + wx * img.at(ya, xb, ch);
                double bot = (1.0 - wx) * img.at(yb, xa, ch) + wx * img.at(yb, xb, ch);
                out.at(y, x, ch) = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

ImageGrid bicubic_resize(const ImageGrid& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) fail(ErrorCode::invalid_arg, "bicubic_resize: bad output size");
    ImageGrid out(out_h, out_w, img.c);
    const double sy = static_cast<double>(img.h) / out_h;
    const double sx = static_cast<double>(img.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0, wsum = 0.0;
                for (int dy = -1; dy <= 2; ++dy) {
                    double wy = cubic_weight(fy - (y0 + dy));
                    if (wy == 0.0) continue;
                    int yy = clampi(y0 + dy, 0, img.h - 1);
                    for (int dx = -1; dx <= 2; ++dx) {
                        double wx = cubic_weight(fx - (x0 + dx));
                        if (wx == 0.0) continue;
                        int xx = clampi(x0 + dx, 0, img.w - 1);
                        acc += wy * wx * img.at(yy, xx, ch);
                        wsum += wy * wx;
                    }
                }
                out.at(y, x, ch) = static_cast<float>(acc / wsum);
            }
        }
    }
    return out;
}

ImageGrid area_downsample(const ImageGrid& img, int scale) {
    if (scale < 1) fail(ErrorCode::invalid_arg, "area_downsample: scale < 1");
    if (scale == 1) return img;
    if (img.h % scale != 0 || img.w % scale != 0)
        fail(ErrorCode::invalid_arg, "area_downsample: dims not divisible by scale");
    ImageGrid out(img.h / scale, img.w / scale, img.c);
    const double inv = 1.0 / (static_cast<double>(scale) * scale);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0;
                for (int dy = 0; dy < scale; ++dy)
                    for (int dx = 0; dx < scale; ++dx) acc += img.at(y * scale + dy, x * scale + dx, ch);
                out.at(y, x, ch) = static_cast<float>(acc * inv);
            }
    return out;
}

ImageGrid clamp01(ImageGrid img) {
    for (auto& v : img.data) v = std::min(1.0f, std::max(0.0f, v));
    return img;
}

ImageGrid quantize_8bit(ImageGrid img) {
    for (auto& v : img.data) {
        float q = std::round(std::min(1.0f, std::max(0.0f, v)) * 255.0f) / 255.0f;
        v = q;
    }
    return img;
}

}  // namespace psidit
