// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "kcf/kernels.hpp"

namespace kcf::simd::detail {
namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc0 = _mm256_add_pd(acc0, acc1);
    __m128d lo = _mm256_castpd256_pd128(acc0);
    __m128d hi = _mm256_extractf128_pd(acc0, 1);
    lo = _mm_add_pd(lo, hi);
    double acc = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void relu_avx2(const double* in, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(in + i), zero));
    for (; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_mask_avx2(const double* pre, double* grad, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(grad + i, _mm256_and_pd(mask, _mm256_loadu_pd(grad + i)));
    }
    for (; i < n; ++i)
        if (!(pre[i] > 0.0)) grad[i] = 0.0;
}

}  // namespace

const KernelTable kAvx2Table{Isa::Avx2, "avx2", dot_avx2, axpy_avx2, relu_avx2, relu_mask_avx2};

}  // namespace kcf::simd::detail
