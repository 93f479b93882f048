#include "kcf/kernels.hpp"

namespace kcf::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void relu_scalar(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_mask_scalar(const double* pre, double* grad, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!(pre[i] > 0.0)) grad[i] = 0.0;
}

}  // namespace

const KernelTable kScalarTable{Isa::Scalar, "scalar", dot_scalar, axpy_scalar, relu_scalar,
                               relu_mask_scalar};

}  // namespace kcf::simd::detail
