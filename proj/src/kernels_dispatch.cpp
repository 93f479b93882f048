#include <atomic>
#include <cstdlib>
#include <string>

#include "kcf/errors.hpp"
#include "kcf/kernels.hpp"

namespace kcf::simd {
namespace {

bool cpu_has(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
#if defined(KCF_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(KCF_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable* table_ptr(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return &detail::kScalarTable;
        case Isa::Avx2:
#if defined(KCF_HAVE_AVX2)
            return &detail::kAvx2Table;
#else
            return nullptr;
#endif
        case Isa::Neon:
#if defined(KCF_HAVE_NEON)
            return &detail::kNeonTable;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable* detect() {
    if (const char* env = std::getenv("KCF_SIMD")) {
        const Isa forced = parse_isa(env);
        if (cpu_has(forced)) return table_ptr(forced);
    }
    for (Isa isa : {Isa::Avx2, Isa::Neon})
        if (cpu_has(isa)) return table_ptr(isa);
    return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> ptr{detect()};
    return ptr;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool supported(Isa isa) { return cpu_has(isa) && table_ptr(isa) != nullptr; }

const KernelTable& table(Isa isa) {
    if (!supported(isa)) throw ConfigError("SIMD variant not available on this CPU");
    return *table_ptr(isa);
}

std::vector<Isa> supported_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon})
        if (supported(isa)) out.push_back(isa);
    return out;
}

void select(Isa isa) { current().store(&table(isa), std::memory_order_relaxed); }

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2") return Isa::Avx2;
    if (name == "neon") return Isa::Neon;
    throw ConfigError("unknown SIMD variant '" + std::string(name) + "' (expected scalar, avx2, neon)");
}

}  // namespace kcf::simd
