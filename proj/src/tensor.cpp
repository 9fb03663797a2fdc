#include "tensor.hpp"

#include <cblas.h>
#include <sstream>

extern "C" void openblas_set_num_threads(int);

namespace psidit {

namespace {
// One BLAS thread keeps results independent of machine load and makes
// reruns byte-identical.
struct BlasInit {
    BlasInit() { openblas_set_num_threads(1); }
};
const BlasInit blas_init;
}  // namespace

void gemm(int M, int N, int K, const float* A, const float* B, float* C,
          bool trans_a, bool trans_b, float alpha, float beta) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
                M, N, K, alpha, A, trans_a ? M : K, B, trans_b ? K : N, beta, C, N);
}

void gemm(int M, int N, int K, const double* A, const double* B, double* C,
          bool trans_a, bool trans_b, double alpha, double beta) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
                M, N, K, alpha, A, trans_a ? M : K, B, trans_b ? K : N, beta, C, N);
}

std::string shape_str(const std::vector<int>& sh) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < sh.size(); ++i) os << (i ? "," : "") << sh[i];
    os << "]";
    return os.str();
}

}  // namespace psidit
