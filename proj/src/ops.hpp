#pragma once

#include "tensor.hpp"

namespace psidit {

// out = softmax(q k^T / sqrt(d)) v over [B,H,Nq,d] / [B,H,Nk,d].
// probs_out, when given, receives the [B,H,Nq,Nk] attention rows.
template <class S>
TensorT<S> scaled_dot_attention(const TensorT<S>& q, const TensorT<S>& k, const TensorT<S>& v,
                                TensorT<S>* probs_out = nullptr);

// Accumulates input gradients; null pointers skip that input.
template <class S>
void scaled_dot_attention_backward(const TensorT<S>& q, const TensorT<S>& k, const TensorT<S>& v,
                                   const TensorT<S>& probs, const TensorT<S>& dout,
                                   TensorT<S>* dq, TensorT<S>* dk, TensorT<S>* dv);

// Per-token zero-mean unit-variance normalization over the last axis,
// then (1 + scale) * xhat + shift. x:[B,N,D], scale/shift:[B,D].
template <class S>
TensorT<S> modulated_layer_norm(const TensorT<S>& x, const TensorT<S>& scale, const TensorT<S>& shift);

template <class S>
void modulated_layer_norm_backward(const TensorT<S>& x, const TensorT<S>& scale, const TensorT<S>& shift,
                                   const TensorT<S>& dout, TensorT<S>* dx, TensorT<S>* dscale,
                                   TensorT<S>* dshift);

inline constexpr double kLayerNormEps = 1e-6;

// y[..., Dout] = x[..., Din] @ w[Din, Dout] + b[Dout]; leading axes collapse.
template <class S>
TensorT<S> linear(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b);

template <class S>
void linear_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& dout,
                     TensorT<S>* dx, TensorT<S>* dw, TensorT<S>* db);

template <class S>
TensorT<S> gelu(const TensorT<S>& x);
template <class S>
void gelu_backward(const TensorT<S>& x, const TensorT<S>& dout, TensorT<S>* dx);

// [B,N,D] <-> [B,H,N,D/H]
template <class S>
TensorT<S> split_heads(const TensorT<S>& x, int heads);
template <class S>
TensorT<S> merge_heads(const TensorT<S>& x);

// concatenate along the token axis: [B,Na,D] + [B,Nb,D] -> [B,Na+Nb,D]
template <class S>
TensorT<S> concat_tokens(const TensorT<S>& a, const TensorT<S>& b);
template <class S>
TensorT<S> slice_tokens(const TensorT<S>& x, int start, int len);

}  // namespace psidit
