#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace psidit {

enum class ErrorCode {
    invalid_arg,
    shape_mismatch,
    numeric,
    io,
    parse,
    bad_checkpoint,
    crc_mismatch,
    backend_transport,
    backend_parse,
    validation,
};

struct Error : std::runtime_error {
    ErrorCode code;
    Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) { throw Error(c, msg); }

// Dense row-major n-d tensor. Values are expected to stay finite; ops that
// can't guarantee that check their inputs and throw ErrorCode::numeric.
template <class S>
struct TensorT {
    std::vector<int> shape;
    std::vector<S> v;

    TensorT() = default;
    explicit TensorT(std::vector<int> sh) : shape(std::move(sh)) {
        v.assign(static_cast<size_t>(numel_of(shape)), S(0));
    }
    TensorT(std::vector<int> sh, std::vector<S> data) : shape(std::move(sh)), v(std::move(data)) {
        if (static_cast<int64_t>(v.size()) != numel_of(shape))
            fail(ErrorCode::shape_mismatch, "tensor data length does not match shape");
    }

    static int64_t numel_of(const std::vector<int>& sh) {
        int64_t n = 1;
        for (int e : sh) {
            if (e < 0) fail(ErrorCode::invalid_arg, "negative tensor extent");
            n *= e;
        }
        return n;
    }
    static TensorT zeros(std::vector<int> sh) { return TensorT(std::move(sh)); }
    static TensorT full(std::vector<int> sh, S val) {
        TensorT t(std::move(sh));
        std::fill(t.v.begin(), t.v.end(), val);
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(v.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }
    S* data() { return v.data(); }
    const S* data() const { return v.data(); }
    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    TensorT reshaped(std::vector<int> sh) const {
        if (numel_of(sh) != numel()) fail(ErrorCode::shape_mismatch, "reshape changes element count");
        return TensorT(std::move(sh), v);
    }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <class S>
bool all_finite(const TensorT<S>& t) {
    for (S x : t.v)
        if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
}

template <class S>
void ensure_finite(const TensorT<S>& t, const char* what) {
    if (!all_finite(t)) fail(ErrorCode::numeric, std::string("non-finite values in ") + what);
}

template <class S>
void ensure_shape(const TensorT<S>& t, const std::vector<int>& sh, const char* what) {
    if (t.shape != sh) fail(ErrorCode::shape_mismatch, std::string("unexpected shape for ") + what);
}

template <class To, class From>
TensorT<To> cast_tensor(const TensorT<From>& t) {
    TensorT<To> out(t.shape);
    for (size_t i = 0; i < t.v.size(); ++i) out.v[i] = static_cast<To>(t.v[i]);
    return out;
}

// C[M,N] = alpha * op(A)[M,K] * op(B)[K,N] + beta * C, row-major.
void gemm(int M, int N, int K, const float* A, const float* B, float* C,
          bool trans_a = false, bool trans_b = false, float alpha = 1.0f, float beta = 0.0f);
void gemm(int M, int N, int K, const double* A, const double* B, double* C,
          bool trans_a = false, bool trans_b = false, double alpha = 1.0, double beta = 0.0);

std::string shape_str(const std::vector<int>& sh);

}  // namespace psidit
