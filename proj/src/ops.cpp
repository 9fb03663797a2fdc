#include "ops.hpp"

#include <algorithm>
#include <cmath>

namespace psidit {

namespace {

template <class S>
void check_attention_shapes(const TensorT<S>& q, const TensorT<S>& k, const TensorT<S>& v) {
    if (q.rank() != 4 || k.rank() != 4 || v.rank() != 4)
        fail(ErrorCode::shape_mismatch, "attention expects [B,H,N,d] tensors");
    if (q.dim(0) != k.dim(0) || q.dim(1) != k.dim(1) || q.dim(3) != k.dim(3))
        fail(ErrorCode::shape_mismatch, "attention q/k mismatch: " + shape_str(q.shape) + " vs " + shape_str(k.shape));
    if (k.shape != v.shape) fail(ErrorCode::shape_mismatch, "attention k/v mismatch");
    if (q.dim(3) <= 0) fail(ErrorCode::invalid_arg, "attention head dim must be positive");
    if (k.dim(2) < 1) fail(ErrorCode::invalid_arg, "attention needs at least one key");
}

}  // namespace

template <class S>
TensorT<S> scaled_dot_attention(const TensorT<S>& q, const TensorT<S>& k, const TensorT<S>& v,
                                TensorT<S>* probs_out) {
    check_attention_shapes(q, k, v);
    ensure_finite(q, "attention q");
    ensure_finite(k, "attention k");
    ensure_finite(v, "attention v");

    const int B = q.dim(0), H = q.dim(1), Nq = q.dim(2), Nk = k.dim(2), d = q.dim(3);
    const S inv_sqrt_d = static_cast<S>(1.0 / std::sqrt(static_cast<double>(d)));

    TensorT<S> out({B, H, Nq, d});
    TensorT<S> probs({B, H, Nq, Nk});
    std::vector<S> logits(static_cast<size_t>(Nq) * Nk);

    for (int b = 0; b < B; ++b) {
        for (int h = 0; h < H; ++h) {
            const S* qp = q.data() + (static_cast<int64_t>(b) * H + h) * Nq * d;
            const S* kp = k.data() + (static_cast<int64_t>(b) * H + h) * Nk * d;
            const S* vp = v.data() + (static_cast<int64_t>(b) * H + h) * Nk * d;
            S* pp = probs.data() + (static_cast<int64_t>(b) * H + h) * Nq * Nk;
            S* op = out.data() + (static_cast<int64_t>(b) * H + h) * Nq * d;

            gemm(Nq, Nk, d, qp, kp, logits.data(), false, true, inv_sqrt_d, S(0));
            for (int i = 0; i < Nq; ++i) {
                S* row = logits.data() + static_cast<size_t>(i) * Nk;
                S m = row[0];
                for (int j = 1; j < Nk; ++j) m = std::max(m, row[j]);
                S sum = S(0);
                for (int j = 0; j < Nk; ++j) {
                    S e = std::exp(row[j] - m);
                    pp[static_cast<size_t>(i) * Nk + j] = e;
                    sum += e;
                }
                S inv = S(1) / sum;
                for (int j = 0; j < Nk; ++j) pp[static_cast<size_t>(i) * Nk + j] *= inv;
            }
            gemm(Nq, d, Nk, pp, vp, op, false, false, S(1), S(0));
        }
    }
    if (probs_out) *probs_out = probs;
    return out;
}

template <class S>
void scaled_dot_attention_backward(const TensorT<S>& q, const TensorT<S>& k, const TensorT<S>& v,
                                   const TensorT<S>& probs, const TensorT<S>& dout,
                                   TensorT<S>* dq, TensorT<S>* dk, TensorT<S>* dv) {
    const int B = q.dim(0), H = q.dim(1), Nq = q.dim(2), Nk = k.dim(2), d = q.dim(3);
    const S inv_sqrt_d = static_cast<S>(1.0 / std::sqrt(static_cast<double>(d)));

    std::vector<S> dp(static_cast<size_t>(Nq) * Nk);
    std::vector<S> ds(static_cast<size_t>(Nq) * Nk);

    for (int b = 0; b < B; ++b) {
        for (int h = 0; h < H; ++h) {
            const int64_t bh = static_cast<int64_t>(b) * H + h;
            const S* qp = q.data() + bh * Nq * d;
            const S* kp = k.data() + bh * Nk * d;
            const S* vp = v.data() + bh * Nk * d;
            const S* pp = probs.data() + bh * Nq * Nk;
            const S* dop = dout.data() + bh * Nq * d;

            if (dv) {
                // dV = P^T dO
                gemm(Nk, d, Nq, pp, dop, dv->data() + bh * Nk * d, true, false, S(1), S(1));
            }
            if (dq || dk) {
                // dP = dO V^T ; dS = P * (dP - rowsum(dP * P))
                gemm(Nq, Nk, d, dop, vp, dp.data(), false, true, S(1), S(0));
                for (int i = 0; i < Nq; ++i) {
                    const S* prow = pp + static_cast<size_t>(i) * Nk;
                    const S* dprow = dp.data() + static_cast<size_t>(i) * Nk;
                    S dot = S(0);
                    for (int j = 0; j < Nk; ++j) dot += prow[j] * dprow[j];
                    S* dsrow = ds.data() + static_cast<size_t>(i) * Nk;
                    for (int j = 0; j < Nk; ++j) dsrow[j] = prow[j] * (dprow[j] - dot);
                }
                if (dq) gemm(Nq, d, Nk, ds.data(), kp, dq->data() + bh * Nq * d, false, false, inv_sqrt_d, S(1));
                if (dk) gemm(Nk, d, Nq, ds.data(), qp, dk->data() + bh * Nk * d, true, false, inv_sqrt_d, S(1));
            }
        }
    }
}

template <class S>
TensorT<S> modulated_layer_norm(const TensorT<S>& x, const TensorT<S>& scale, const TensorT<S>& shift) {
    if (x.rank() != 3 || scale.rank() != 2 || shift.rank() != 2)
        fail(ErrorCode::shape_mismatch, "modulated_layer_norm expects x:[B,N,D], scale/shift:[B,D]");
    const int B = x.dim(0), N = x.dim(1), D = x.dim(2);
    if (scale.dim(0) != B || scale.dim(1) != D || shift.dim(0) != B || shift.dim(1) != D)
        fail(ErrorCode::shape_mismatch, "modulated_layer_norm width mismatch");

    TensorT<S> out(x.shape);
    for (int b = 0; b < B; ++b) {
        const S* sc = scale.data() + static_cast<int64_t>(b) * D;
        const S* sh = shift.data() + static_cast<int64_t>(b) * D;
        for (int n = 0; n < N; ++n) {
            const S* row = x.data() + (static_cast<int64_t>(b) * N + n) * D;
            S* orow = out.data() + (static_cast<int64_t>(b) * N + n) * D;
            S mean = S(0);
            for (int i = 0; i < D; ++i) mean += row[i];
            mean /= static_cast<S>(D);
            S var = S(0);
            for (int i = 0; i < D; ++i) {
                S c = row[i] - mean;
                var += c * c;
            }
            var /= static_cast<S>(D);
            S inv_std = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
            for (int i = 0; i < D; ++i) {
                S xhat = (row[i] - mean) * inv_std;
                orow[i] = (S(1) + sc[i]) * xhat + sh[i];
            }
        }
    }
    return out;
}

template <class S>
void modulated_layer_norm_backward(const TensorT<S>& x, const TensorT<S>& scale, const TensorT<S>& shift,
                                   const TensorT<S>& dout, TensorT<S>* dx, TensorT<S>* dscale,
                                   TensorT<S>* dshift) {
    (void)shift;
    const int B = x.dim(0), N = x.dim(1), D = x.dim(2);
    std::vector<S> xhat(static_cast<size_t>(D));
    std::vector<S> dxhat(static_cast<size_t>(D));

    for (int b = 0; b < B; ++b) {
        const S* sc = scale.data() + static_cast<int64_t>(b) * D;
        for (int n = 0; n < N; ++n) {
            const S* row = x.data() + (static_cast<int64_t>(b) * N + n) * D;
            const S* drow = dout.data() + (static_cast<int64_t>(b) * N + n) * D;
            S mean = S(0);
            for (int i = 0; i < D; ++i) mean += row[i];
            mean /= static_cast<S>(D);
            S var = S(0);
            for (int i = 0; i < D; ++i) {
                S c = row[i] - mean;
                var += c * c;
            }
            var /= static_cast<S>(D);
            S inv_std = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
            for (int i = 0; i < D; ++i) xhat[static_cast<size_t>(i)] = (row[i] - mean) * inv_std;

            if (dscale) {
                S* dsc = dscale->data() + static_cast<int64_t>(b) * D;
                for (int i = 0; i < D; ++i) dsc[i] += drow[i] * xhat[static_cast<size_t>(i)];
            }
            if (dshift) {
                S* dsh = dshift->data() + static_cast<int64_t>(b) * D;
                for (int i = 0; i < D; ++i) dsh[i] += drow[i];
            }
            if (dx) {
                S m1 = S(0), m2 = S(0);
                for (int i = 0; i < D; ++i) {
                    dxhat[static_cast<size_t>(i)] = drow[i] * (S(1) + sc[i]);
                    m1 += dxhat[static_cast<size_t>(i)];
                    m2 += dxhat[static_cast<size_t>(i)] * xhat[static_cast<size_t>(i)];
                }
                m1 /= static_cast<S>(D);
                m2 /= static_cast<S>(D);
                S* dxrow = dx->data() + (static_cast<int64_t>(b) * N + n) * D;
                for (int i = 0; i < D; ++i)
                    dxrow[i] += inv_std * (dxhat[static_cast<size_t>(i)] - m1 - xhat[static_cast<size_t>(i)] * m2);
            }
        }
    }
}

template <class S>
TensorT<S> linear(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b) {
    if (w.rank() != 2 || b.rank() != 1 || x.rank() < 1)
        fail(ErrorCode::shape_mismatch, "linear expects x:[...,Din], w:[Din,Dout], b:[Dout]");
    const int Din = w.dim(0), Dout = w.dim(1);
    if (x.shape.back() != Din || b.dim(0) != Dout)
        fail(ErrorCode::shape_mismatch, "linear width mismatch: x " + shape_str(x.shape) + " w " + shape_str(w.shape));
    const int M = static_cast<int>(x.numel() / Din);

    std::vector<int> out_shape = x.shape;
    out_shape.back() = Dout;
    TensorT<S> out(out_shape);
    if (M == 0) return out;
    for (int m = 0; m < M; ++m)
        std::copy(b.data(), b.data() + Dout, out.data() + static_cast<int64_t>(m) * Dout);
    gemm(M, Dout, Din, x.data(), w.data(), out.data(), false, false, S(1), S(1));
    return out;
}

template <class S>
void linear_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& dout,
                     TensorT<S>* dx, TensorT<S>* dw, TensorT<S>* db) {
    const int Din = w.dim(0), Dout = w.dim(1);
    const int M = static_cast<int>(x.numel() / Din);
    if (M == 0) return;
    if (dx) gemm(M, Din, Dout, dout.data(), w.data(), dx->data(), false, true, S(1), S(1));
    if (dw) gemm(Din, Dout, M, x.data(), dout.data(), dw->data(), true, false, S(1), S(1));
    if (db) {
        S* dbp = db->data();
        const S* dp = dout.data();
        for (int m = 0; m < M; ++m)
            for (int i = 0; i < Dout; ++i) dbp[i] += dp[static_cast<int64_t>(m) * Dout + i];
    }
}

// tanh-approximation GELU
template <class S>
TensorT<S> gelu(const TensorT<S>& x) {
    TensorT<S> out(x.shape);
    const S c = static_cast<S>(std::sqrt(2.0 / M_PI));
    for (size_t i = 0; i < x.v.size(); ++i) {
        S xi = x.v[i];
        S t = std::tanh(c * (xi + static_cast<S>(0.044715) * xi * xi * xi));
        out.v[i] = static_cast<S>(0.5) * xi * (S(1) + t);
    }
    return out;
}

template <class S>
void gelu_backward(const TensorT<S>& x, const TensorT<S>& dout, TensorT<S>* dx) {
    const S c = static_cast<S>(std::sqrt(2.0 / M_PI));
    for (size_t i = 0; i < x.v.size(); ++i) {
        S xi = x.v[i];
        S u = c * (xi + static_cast<S>(0.044715) * xi * xi * xi);
        S t = std::tanh(u);
        S du = c * (S(1) + static_cast<S>(3.0 * 0.044715) * xi * xi);
        S g = static_cast<S>(0.5) * (S(1) + t) + static_cast<S>(0.5) * xi * (S(1) - t * t) * du;
        dx->v[i] += dout.v[i] * g;
    }
}

template <class S>
TensorT<S> split_heads(const TensorT<S>& x, int heads) {
    if (x.rank() != 3) fail(ErrorCode::shape_mismatch, "split_heads expects [B,N,D]");
    const int B = x.dim(0), N = x.dim(1), D = x.dim(2);
    if (D % heads != 0) fail(ErrorCode::invalid_arg, "width not divisible by heads");
    const int dh = D / heads;
    TensorT<S> out({B, heads, N, dh});
    for (int b = 0; b < B; ++b)
        for (int n = 0; n < N; ++n)
            for (int h = 0; h < heads; ++h) {
                const S* src = x.data() + ((static_cast<int64_t>(b) * N + n) * D) + static_cast<int64_t>(h) * dh;
                S* dst = out.data() + (((static_cast<int64_t>(b) * heads + h) * N) + n) * dh;
                std::copy(src, src + dh, dst);
            }
    return out;
}

template <class S>
TensorT<S> merge_heads(const TensorT<S>& x) {
    if (x.rank() != 4) fail(ErrorCode::shape_mismatch, "merge_heads expects [B,H,N,dh]");
    const int B = x.dim(0), H = x.dim(1), N = x.dim(2), dh = x.dim(3);
    TensorT<S> out({B, N, H * dh});
    for (int b = 0; b < B; ++b)
        for (int h = 0; h < H; ++h)
            for (int n = 0; n < N; ++n) {
                const S* src = x.data() + (((static_cast<int64_t>(b) * H + h) * N) + n) * dh;
                S* dst = out.data() + ((static_cast<int64_t>(b) * N + n) * H * dh) + static_cast<int64_t>(h) * dh;
                std::copy(src, src + dh, dst);
            }
    return out;
}

template <class S>
TensorT<S> concat_tokens(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
        fail(ErrorCode::shape_mismatch, "concat_tokens mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    const int B = a.dim(0), Na = a.dim(1), Nb = b.dim(1), D = a.dim(2);
    TensorT<S> out({B, Na + Nb, D});
    for (int bi = 0; bi < B; ++bi) {
        std::copy(a.data() + static_cast<int64_t>(bi) * Na * D, a.data() + static_cast<int64_t>(bi + 1) * Na * D,
                  out.data() + static_cast<int64_t>(bi) * (Na + Nb) * D);
        std::copy(b.data() + static_cast<int64_t>(bi) * Nb * D, b.data() + static_cast<int64_t>(bi + 1) * Nb * D,
                  out.data() + static_cast<int64_t>(bi) * (Na + Nb) * D + static_cast<int64_t>(Na) * D);
    }
    return out;
}

template <class S>
TensorT<S> slice_tokens(const TensorT<S>& x, int start, int len) {
    if (x.rank() != 3) fail(ErrorCode::shape_mismatch, "slice_tokens expects [B,N,D]");
    const int B = x.dim(0), N = x.dim(1), D = x.dim(2);
    if (start < 0 || len < 0 || start + len > N) fail(ErrorCode::invalid_arg, "slice_tokens out of range");
    TensorT<S> out({B, len, D});
    for (int b = 0; b < B; ++b)
        std::copy(x.data() + (static_cast<int64_t>(b) * N + start) * D,
                  x.data() + (static_cast<int64_t>(b) * N + start + len) * D,
                  out.data() + static_cast<int64_t>(b) * len * D);
    return out;
}

#define PSIDIT_INSTANTIATE_OPS(S)                                                                              \
    template TensorT<S> scaled_dot_attention<S>(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&,      \
                                                TensorT<S>*);                                                  \
    template void scaled_dot_attention_backward<S>(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&,   \
                                                   const TensorT<S>&, const TensorT<S>&, TensorT<S>*,         \
                                                   TensorT<S>*, TensorT<S>*);                                  \
    template TensorT<S> modulated_layer_norm<S>(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&);      \
    template void modulated_layer_norm_backward<S>(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&,   \
                                                   const TensorT<S>&, TensorT<S>*, TensorT<S>*, TensorT<S>*); \
    template TensorT<S> linear<S>(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&);                    \
    template void linear_backward<S>(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&, TensorT<S>*,    \
                                     TensorT<S>*, TensorT<S>*);                                                \
    template TensorT<S> gelu<S>(const TensorT<S>&);                                                            \
    template void gelu_backward<S>(const TensorT<S>&, const TensorT<S>&, TensorT<S>*);                         \
    template TensorT<S> split_heads<S>(const TensorT<S>&, int);                                                \
    template TensorT<S> merge_heads<S>(const TensorT<S>&);                                                     \
    template TensorT<S> concat_tokens<S>(const TensorT<S>&, const TensorT<S>&);                                \
    template TensorT<S> slice_tokens<S>(const TensorT<S>&, int, int);

PSIDIT_INSTANTIATE_OPS(float)
PSIDIT_INSTANTIATE_OPS(double)

#undef PSIDIT_INSTANTIATE_OPS

}  // namespace psidit
