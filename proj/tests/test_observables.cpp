#include <doctest.h>

#include <cmath>

#include "kcf/dynamics.hpp"
#include "kcf/errors.hpp"
#include "kcf/families.hpp"
#include "kcf/observables.hpp"

using namespace kcf;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }
Vector v1(double a) { return Vector::Constant(1, a); }

Matrix probe_states(int n, int count, std::uint64_t seed) {
    UniformSampler rng(seed);
    Matrix P(n, count);
    for (int j = 0; j < count; ++j)
        for (int i = 0; i < n; ++i) P(i, j) = rng.uniform(-2, 2);
    return P;
}

}  // namespace

TEST_CASE("example dictionary evaluation") {
    const NormalDictionary nd = dictionaries::example_poly();
    CHECK(nd.l() == 4);
    CHECK(nd.s() == 8);
    const Vector h = nd.H.eval(v2(2, 3));
    CHECK(h == (Vector(4) << 2, 3, 4, 1).finished());
    const Vector phi = nd.eval(v2(2, 3), v1(0.5));
    const Vector expect = (Vector(8) << 2, 3, 4, 1, 1.0, 0.5, 0.25, std::sin(0.5)).finished();
    CHECK((phi - expect).norm() <= 1e-15);
    CHECK((nd.G(v1(0.5)) * h - phi).norm() <= 1e-15);
}

TEST_CASE("matrix evaluation") {
    const NormalDictionary nd = dictionaries::example_poly();
    const Matrix X = probe_states(2, 7, 1);
    const Matrix H = eval_matrix(nd.H, X);
    CHECK(H.rows() == 4);
    CHECK(H.row(3) == Matrix::Ones(1, 7));
    CHECK(eval_matrix(nd.H, Matrix(2, 0)).cols() == 0);
    CHECK(nd.eval_matrix(Matrix(3, 0)).rows() == 8);
}

TEST_CASE("control-independent extension") {
    const NormalDictionary nd = dictionaries::example_poly();
    const Vector e1 = Vector::Unit(4, 0);
    const Vector ext = control_independent_extension(e1, nd);
    CHECK(ext == Vector::Unit(8, 0));

    UniformSampler rng(2);
    const Vector h = (Vector(4) << 0.3, -1.2, 0.7, 2.0).finished();
    const Vector eh = control_independent_extension(h, nd);
    double dev = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Vector x = v2(rng.uniform(-2, 2), rng.uniform(-2, 2));
        const Vector u = v1(rng.uniform(-2, 2));
        dev = std::max(dev, std::abs(eh.dot(nd.eval(x, u)) - h.dot(nd.H.eval(x))));
    }
    CHECK(dev <= 1e-14);

    const Vector g = (Vector(4) << 1, 0, -1, 0.5).finished();
    CHECK((control_independent_extension(2 * h - 3 * g, nd) -
           (2 * control_independent_extension(h, nd) - 3 * control_independent_extension(g, nd)))
              .norm() <= 1e-15);
    CHECK_THROWS_AS(control_independent_extension(Vector::Ones(3), nd), DimensionMismatch);
}

TEST_CASE("separable decomposition of the example basis") {
    const SeparableTermList terms = dictionaries::example_poly_terms();
    const SeparableDecomposition d = decompose_separable(terms, probe_states(2, 30, 3));
    CHECK(d.H.dim == 4);
    // Phi = G(u) H'(x) reproduces the basis
    UniformSampler rng(4);
    for (int k = 0; k < 10; ++k) {
        const Vector x = v2(rng.uniform(-2, 2), rng.uniform(-2, 2));
        const Vector u = v1(rng.uniform(-2, 2));
        CHECK((d.G(u) * d.H.eval(x) - terms.eval(x, u)).norm() <= 1e-10);
    }
    // H' spans {x1, x2, x1^2, 1}
    const Matrix P = probe_states(2, 40, 5);
    const Matrix Hp = eval_matrix(d.H, P);
    const Matrix Href = eval_matrix(dictionaries::example_poly().H, P);
    Matrix both(8, 40);
    both << Hp, Href;
    Eigen::JacobiSVD<Matrix> svd(both);
    CHECK(svd.singularValues()(4) <= 1e-10 * svd.singularValues()(0));
    CHECK(svd.singularValues()(3) > 1e-6 * svd.singularValues()(0));
}

TEST_CASE("separable decomposition of small term lists") {
    SeparableTermList single{2, 1, {{{[](const Vector& u) { return std::cos(u(0)); },
                                       [](const Vector& x) { return x(0) * x(1); }, "cos u", "x1 x2"}}}};
    const auto d1 = decompose_separable(single, probe_states(2, 10, 6));
    CHECK(d1.H.dim == 1);
    const Vector x = v2(0.7, -1.1), u = v1(0.4);
    CHECK(std::abs((d1.G(u) * d1.H.eval(x))(0) - std::cos(0.4) * 0.7 * -1.1) <= 1e-14);

    SeparableTermList dup{2, 1,
                          {{{[](const Vector& u) { return u(0); }, [](const Vector& x) { return x(0); }, "u", "x1"}},
                           {{[](const Vector& u) { return u(0) * u(0); }, [](const Vector& x) { return x(0); }, "u^2", "x1"}}}};
    CHECK(decompose_separable(dup, probe_states(2, 10, 7)).H.dim == 1);

    CHECK_THROWS_AS(decompose_separable(dictionaries::example_poly_terms(), probe_states(2, 3, 8)),
                    RankDeficientProbe);
}

TEST_CASE("rank condition") {
    const NormalDictionary nd = dictionaries::example_poly();
    std::vector<Vector> grid;
    for (int i = 0; i <= 80; ++i) grid.push_back(v1(-4 + 0.1 * i));
    const InputMatrixMap G = [&](const Vector& u) { return nd.G(u); };
    CHECK(check_rank_condition(G, grid).full_rank);

    const InputMatrixMap scalar = [](const Vector& u) { return Matrix::Constant(1, 1, u(0)); };
    const RankCheck rc = check_rank_condition(scalar, {v1(1), v1(0), v1(-2)});
    CHECK(!rc.full_rank);
    REQUIRE(rc.failing_inputs.size() == 1);
    CHECK(rc.failing_inputs[0](0) == 0.0);
}

TEST_CASE("normality verification") {
    const NormalDictionary nd = dictionaries::example_poly();
    std::vector<Vector> us;
    for (double u : {-1.7, -0.4, 0.3, 1.1, 1.9}) us.push_back(v1(u));
    const InputMatrixMap G = [&](const Vector& u) { return nd.G(u); };
    const NormalityCheck already = verify_normality(G, us);
    CHECK(already.normal);
    CHECK(already.residual <= 1e-12);

    UniformSampler rng(9);
    Matrix T(8, 8);
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i) T(i, j) = rng.uniform(-1, 1);
    T += 3 * Matrix::Identity(8, 8);
    const InputMatrixMap mixed = [&](const Vector& u) { return Matrix(T * nd.G(u)); };
    const NormalityCheck nc = verify_normality(mixed, us);
    CHECK(nc.normal);
    CHECK(nc.residual <= 1e-8);
    REQUIRE(nc.transform);
    for (const auto& u : us) {
        const Matrix top = (*nc.transform * mixed(u)).topRows(4);
        CHECK((top - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);
    }

    const InputMatrixMap poly = [](const Vector& u) { return (Matrix(2, 1) << u(0), u(0) * u(0)).finished(); };
    const NormalityCheck no = verify_normality(poly, {v1(1), v1(2), v1(3)});
    CHECK(!no.normal);
    CHECK(no.residual > 1e-3);
}

TEST_CASE("polynomial family feature count") {
    CHECK(monomial_exponents(2, 2).size() == 6);
    CHECK(monomial_exponents(2, 2).front() == std::vector<int>{0, 0});
    CHECK(monomial_exponents(3, 3).size() == 20);
    ParamMap p(FamilySpec::polynomial(2), 2, 3);
    CHECK(p.num_params() == 18);
}

TEST_CASE("residual network of the reference size") {
    const FamilySpec f = FamilySpec::residual_mlp(5, 64);
    CHECK(f.blocks == 5);
    CHECK(f.width == 64);
    ParametricDictionary d(f, 2, 1, 20, 4, {0, 1});
    CHECK(d.s() == 20);
    CHECK(d.l() == 4);
    CHECK(d.hnet().out_dim() == 2);
    REQUIRE(d.gnet());
    CHECK(d.gnet()->out_dim() == 16 * 4);
}

TEST_CASE("parametric dictionary is in normal form") {
    ParametricDictionary d(FamilySpec::mlp({12, 12}), 2, 1, 9, 5, {0, 1});
    d.initialize(3);
    const NormalDictionary nd = d.as_normal();
    CHECK(nd.s() == 9);
    CHECK(nd.H.tags[0] == "x1");
    CHECK(nd.H.tags[1] == "x2");
    const Vector x = v2(0.4, -0.3), u = v1(1.2);
    const Vector phi = nd.eval(x, u);
    CHECK(phi.head(2) == x);
    Vector z(3);
    z << x, u;
    CHECK((d.eval(z).col(0) - phi).norm() <= 1e-13);
    CHECK((nd.G(u).topRows(5) - Matrix::Identity(5, 5)).norm() == 0.0);
}

TEST_CASE("family validation") {
    CHECK_THROWS_AS(FamilySpec::residual_mlp(0, 8).validate(), ConfigError);
    CHECK_THROWS_AS(FamilySpec::mlp({}).validate(), ConfigError);
    CHECK_THROWS_AS(FamilySpec::polynomial(0).validate(), ConfigError);
    CHECK_THROWS_AS(ParametricDictionary(FamilySpec::polynomial(2), 2, 1, 4, 5), ConfigError);
}
