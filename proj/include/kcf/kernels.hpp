#pragma once

// Data-parallel inner loops used by the dictionary networks.
//
// Every kernel has a scalar reference implementation; vector variants
// (AVX2+FMA on x86-64, NEON on AArch64) are selected once at runtime from
// CPU feature detection. The environment variable KCF_SIMD=scalar forces
// the reference path. Results of the vector paths agree with the scalar
// path up to floating-point reassociation (see tests/test_kernels.cpp).

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace kcf::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
    Isa isa;
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out[i] = max(in[i], 0)
    void (*relu)(const double* in, double* out, std::size_t n);
    // grad[i] = pre[i] > 0 ? grad[i] : 0
    void (*relu_mask)(const double* pre, double* grad, std::size_t n);
};

/// Kernel table chosen for this process.
const KernelTable& active();

/// Table for a specific ISA; throws kcf::ConfigError if the CPU lacks it.
const KernelTable& table(Isa isa);

bool supported(Isa isa);

/// ISAs usable on this machine, scalar first.
std::vector<Isa> supported_isas();

/// Override the runtime choice (tests and the CLI `--simd` flag).
void select(Isa isa);

Isa parse_isa(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

namespace detail {
extern const KernelTable kScalarTable;
#if defined(KCF_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(KCF_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace kcf::simd
