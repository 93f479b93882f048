#include <arm_neon.h>

#include "kcf/kernels.hpp"

namespace kcf::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void relu_neon(const double* in, double* out, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmaxq_f64(vld1q_f64(in + i), zero));
    for (; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_mask_neon(const double* pre, double* grad, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t mask = vcgtq_f64(vld1q_f64(pre + i), zero);
        vst1q_f64(grad + i, vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(vld1q_f64(grad + i)))));
    }
    for (; i < n; ++i)
        if (!(pre[i] > 0.0)) grad[i] = 0.0;
}

}  // namespace

const KernelTable kNeonTable{Isa::Neon, "neon", dot_neon, axpy_neon, relu_neon, relu_mask_neon};

}  // namespace kcf::simd::detail
