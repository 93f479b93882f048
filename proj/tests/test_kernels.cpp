#include <doctest.h>

#include <cmath>
#include <vector>

#include "kcf/dynamics.hpp"
#include "kcf/errors.hpp"
#include "kcf/families.hpp"
#include "kcf/kernels.hpp"

using namespace kcf;

namespace {

std::vector<double> random_values(UniformSampler& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-3, 3);
    return v;
}

struct RestoreIsa {
    simd::Isa saved = simd::active().isa;
    ~RestoreIsa() { simd::select(saved); }
};

}  // namespace

TEST_CASE("scalar table is always available") {
    const auto isas = simd::supported_isas();
    REQUIRE(!isas.empty());
    CHECK(isas.front() == simd::Isa::Scalar);
    CHECK(std::string(simd::table(simd::Isa::Scalar).name) == "scalar");
}

TEST_CASE("vector kernels agree with the scalar reference") {
    UniformSampler rng(11);
    const auto& ref = simd::table(simd::Isa::Scalar);
    for (simd::Isa isa : simd::supported_isas()) {
        const auto& k = simd::table(isa);
        CAPTURE(k.name);
        for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 31u, 64u, 67u, 1000u}) {
            CAPTURE(n);
            const auto a = random_values(rng, n), b = random_values(rng, n);
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
            CHECK(std::abs(k.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= 1e-14 * (scale + 1));

            auto y1 = b, y2 = b;
            ref.axpy(0.37, a.data(), y1.data(), n);
            k.axpy(0.37, a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(y1[i]) + 1));

            std::vector<double> r1(n), r2(n);
            ref.relu(a.data(), r1.data(), n);
            k.relu(a.data(), r2.data(), n);
            CHECK(r1 == r2);

            auto g1 = b, g2 = b;
            ref.relu_mask(a.data(), g1.data(), n);
            k.relu_mask(a.data(), g2.data(), n);
            CHECK(g1 == g2);
        }
    }
}

TEST_CASE("relu kernels treat zero and negative zero as inactive") {
    const std::vector<double> in{0.0, -0.0, 1e-300, -1e-300};
    for (simd::Isa isa : simd::supported_isas()) {
        const auto& k = simd::table(isa);
        std::vector<double> out(in.size());
        k.relu(in.data(), out.data(), in.size());
        CHECK(out[2] == 1e-300);
        CHECK(out[3] == 0.0);
        std::vector<double> g(in.size(), 1.0);
        k.relu_mask(in.data(), g.data(), in.size());
        CHECK(g == std::vector<double>{0.0, 0.0, 1.0, 0.0});
    }
}

TEST_CASE("network forward and backward agree across kernel variants") {
    RestoreIsa restore;
    ParametricDictionary dict(FamilySpec::residual_mlp(2, 16), 2, 1, 8, 4, {0, 1});
    dict.initialize(5);
    UniformSampler rng(6);
    Matrix X(2, 50), Xp(2, 50), U(1, 50);
    for (int i = 0; i < 50; ++i) {
        X.col(i) << rng.uniform(-1, 1), rng.uniform(-1, 1);
        Xp.col(i) << rng.uniform(-1, 1), rng.uniform(-1, 1);
        U(0, i) = rng.uniform(-1, 1);
    }
    simd::select(simd::Isa::Scalar);
    const auto ref = dict.forward(X, Xp, U);
    const Vector gref = dict.backward(ref, Matrix::Ones(8, 50), Matrix::Ones(8, 50));
    for (simd::Isa isa : simd::supported_isas()) {
        simd::select(isa);
        CHECK(simd::active().isa == isa);
        const auto p = dict.forward(X, Xp, U);
        CHECK((p.Phi - ref.Phi).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((p.PhiPlus - ref.PhiPlus).cwiseAbs().maxCoeff() <= 1e-12);
        const Vector g = dict.backward(p, Matrix::Ones(8, 50), Matrix::Ones(8, 50));
        CHECK((g - gref).norm() <= 1e-11 * (gref.norm() + 1));
    }
}

TEST_CASE("isa names parse") {
    CHECK(simd::parse_isa("scalar") == simd::Isa::Scalar);
    CHECK(simd::parse_isa("avx2") == simd::Isa::Avx2);
    CHECK(simd::parse_isa("neon") == simd::Isa::Neon);
    CHECK_THROWS_AS(simd::parse_isa("sse9"), ConfigError);
}
