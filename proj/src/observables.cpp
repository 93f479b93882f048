#include "kcf/observables.hpp"

#include <cmath>
#include <memory>

#include "kcf/errors.hpp"

namespace kcf {

void NormalDictionary::validate() const {
    if (!H.eval || H.dim <= 0) throw ConfigError("normal dictionary: H must have at least one element");
    if (Gtilde) {
        if (Gtilde->cols != H.dim) throw ConfigError("normal dictionary: G~ must have l columns");
        if (Gtilde->rows <= 0 || !Gtilde->eval) throw ConfigError("normal dictionary: G~ is empty");
    }
}

Vector NormalDictionary::eval(const Vector& x, const Vector& u) const {
    const Vector h = H.eval(x);
    if (!Gtilde) return h;
    Vector phi(s());
    phi.head(l()) = h;
    phi.tail(Gtilde->rows) = Gtilde->eval(u) * h;
    return phi;
}

Matrix NormalDictionary::G(const Vector& u) const {
    Matrix g = Matrix::Zero(s(), l());
    g.topRows(l()).setIdentity();
    if (Gtilde) g.bottomRows(Gtilde->rows) = Gtilde->eval(u);
    return g;
}

Matrix NormalDictionary::eval_matrix(const Matrix& Z) const {
    const int n = state_dim();
    const int m = input_dim();
    if (Z.rows() != n + m)
        throw DimensionMismatch("dictionary expects " + std::to_string(n + m) + " rows, data has " +
                                std::to_string(Z.rows()));
    Matrix out(s(), Z.cols());
    for (Eigen::Index i = 0; i < Z.cols(); ++i) out.col(i) = eval(Z.col(i).head(n), Z.col(i).tail(m));
    return out;
}

Matrix eval_matrix(const StateDictionary& H, const Matrix& X) {
    if (X.rows() != H.state_dim)
        throw DimensionMismatch("state dictionary expects " + std::to_string(H.state_dim) + " rows, data has " +
                                std::to_string(X.rows()));
    Matrix out(H.dim, X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) out.col(i) = H.eval(X.col(i));
    return out;
}

Vector control_independent_extension(const Vector& h_coeffs, const NormalDictionary& nd) {
    if (h_coeffs.size() != nd.l()) throw DimensionMismatch("extension: coefficient vector must have length l");
    Vector out = Vector::Zero(nd.s());
    out.head(nd.l()) = h_coeffs;
    return out;
}

std::size_t SeparableTermList::total_terms() const {
    std::size_t total = 0;
    for (const auto& f : functions) total += f.size();
    return total;
}

Vector SeparableTermList::eval(const Vector& x, const Vector& u) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(functions.size()));
    for (std::size_t i = 0; i < functions.size(); ++i)
        for (const auto& t : functions[i]) out(static_cast<Eigen::Index>(i)) += t.p(u) * t.q(x);
    return out;
}

SeparableDecomposition decompose_separable(const SeparableTermList& terms, const Matrix& probe_states,
                                           double tol) {
    struct Flat {
        std::size_t fn;
        SeparableTerm term;
    };
    auto flat = std::make_shared<std::vector<Flat>>();
    for (std::size_t i = 0; i < terms.functions.size(); ++i)
        for (const auto& t : terms.functions[i]) flat->push_back({i, t});
    const auto T = static_cast<Eigen::Index>(flat->size());
    const Eigen::Index P = probe_states.cols();
    if (T == 0) throw ConfigError("decompose_separable: no terms");
    if (P < T)
        throw RankDeficientProbe("decompose_separable: " + std::to_string(P) + " probe states for " +
                                 std::to_string(T) + " terms; add probe points");

    Matrix qeval(T, P);
    for (Eigen::Index j = 0; j < T; ++j)
        for (Eigen::Index c = 0; c < P; ++c) qeval(j, c) = (*flat)[j].term.q(probe_states.col(c));

    const double scale = qeval.rowwise().norm().maxCoeff();
    if (scale == 0.0) throw RankDeficientProbe("decompose_separable: all state factors vanish on the probes");

    // Greedy rank-revealing Gram-Schmidt in term order.
    std::vector<Vector> basis;
    std::vector<std::size_t> selected;
    for (Eigen::Index j = 0; j < T; ++j) {
        Vector r = qeval.row(j).transpose();
        const double norm = r.norm();
        if (norm <= tol * scale) continue;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) r -= b.dot(r) * b;
        if (r.norm() > tol * norm) {
            basis.push_back(r / r.norm());
            selected.push_back(static_cast<std::size_t>(j));
        }
    }
    const auto lp = static_cast<Eigen::Index>(selected.size());
    if (lp >= P)
        throw RankDeficientProbe("decompose_separable: probe evaluations have full rank " + std::to_string(lp) +
                                 "; dim Q cannot be resolved, add probe points");

    Matrix hsel(lp, P);
    for (Eigen::Index k = 0; k < lp; ++k) hsel.row(k) = qeval.row(static_cast<Eigen::Index>(selected[k]));
    // q_j = v_j^T H' on the probes
    const Matrix coeffs = hsel.transpose().colPivHouseholderQr().solve(qeval.transpose());  // lp x T
    const double recon = (coeffs.transpose() * hsel - qeval).cwiseAbs().maxCoeff() / (1.0 + scale);

    SeparableDecomposition out;
    out.selected = selected;
    out.probe_reconstruction_error = recon;
    if (recon > tol) throw RankDeficientProbe("decompose_separable: probe reconstruction error too large");

    out.H.state_dim = terms.state_dim;
    out.H.dim = static_cast<int>(lp);
    for (auto j : selected) out.H.tags.push_back((*flat)[j].term.q_tag);
    out.H.eval = [flat, selected](const Vector& x) {
        Vector h(static_cast<Eigen::Index>(selected.size()));
        for (std::size_t k = 0; k < selected.size(); ++k)
            h(static_cast<Eigen::Index>(k)) = (*flat)[selected[k]].term.q(x);
        return h;
    };

    const auto s = static_cast<Eigen::Index>(terms.functions.size());
    out.G = [flat, coeffs, s, lp](const Vector& u) {
        Matrix g = Matrix::Zero(s, lp);
        for (std::size_t j = 0; j < flat->size(); ++j)
            g.row(static_cast<Eigen::Index>((*flat)[j].fn)) +=
                (*flat)[j].term.p(u) * coeffs.col(static_cast<Eigen::Index>(j)).transpose();
        return g;
    };
    return out;
}

RankCheck check_rank_condition(const InputMatrixMap& G, const std::vector<Vector>& u_samples, double tol) {
    RankCheck out;
    for (const auto& u : u_samples) {
        const Matrix g = G(u);
        const Vector sv = linalg::singular_values(g);
        double rel = 0.0;
        if (g.rows() >= g.cols() && sv.size() == g.cols() && sv(0) > 0.0) rel = sv(sv.size() - 1) / sv(0);
        out.relative_sigma_min.push_back(rel);
        if (!(rel > tol)) {
            out.full_rank = false;
            out.failing_inputs.push_back(u);
        }
    }
    return out;
}

NormalityCheck verify_normality(const InputMatrixMap& G, const std::vector<Vector>& u_samples, double tol) {
    NormalityCheck out;
    if (u_samples.empty()) return out;
    const Matrix g0 = G(u_samples.front());
    const Eigen::Index s = g0.rows();
    const Eigen::Index l = g0.cols();
    const auto k = static_cast<Eigen::Index>(u_samples.size());

    Matrix stacked(s, k * l);
    Matrix target(l, k * l);
    for (Eigen::Index i = 0; i < k; ++i) {
        stacked.middleCols(i * l, l) = i == 0 ? g0 : G(u_samples[i]);
        target.middleCols(i * l, l).setIdentity();
    }
    const Matrix W = target * linalg::pinv(stacked);
    out.residual = (W * stacked - target).norm() / std::sqrt(static_cast<double>(k * l));
    out.normal = out.residual <= tol;
    if (!out.normal) return out;

    Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeFullV);
    Matrix E(s, s);
    E.topRows(l) = W;
    E.bottomRows(s - l) = svd.matrixV().rightCols(s - l).transpose();
    out.transform = E;
    return out;
}

namespace dictionaries {

NormalDictionary example_poly(bool with_square, bool with_sin) {
    NormalDictionary nd;
    nd.name = "example_poly";
    nd.H.state_dim = 2;
    nd.H.dim = with_square ? 4 : 3;
    nd.H.tags = with_square ? std::vector<std::string>{"x1", "x2", "x1^2", "1"}
                            : std::vector<std::string>{"x1", "x2", "1"};
    nd.H.eval = [with_square](const Vector& x) {
        Vector h(with_square ? 4 : 3);
        if (with_square) h << x(0), x(1), x(0) * x(0), 1.0;
        else h << x(0), x(1), 1.0;
        return h;
    };
    const int l = nd.H.dim;
    const int one = l - 1;  // index of the constant in H
    InputMatrixFunction g;
    g.input_dim = 1;
    g.cols = l;
    g.rows = with_sin ? 4 : 3;
    g.eval = [l, one, with_sin](const Vector& uv) {
        const double u = uv(0);
        Matrix gt = Matrix::Zero(with_sin ? 4 : 3, l);
        gt(0, 0) = u;        // x1 u
        gt(1, one) = u;      // u
        gt(2, one) = u * u;  // u^2
        if (with_sin) gt(3, one) = std::sin(u);
        return gt;
    };
    nd.Gtilde = g;
    return nd;
}

SeparableTermList example_poly_terms() {
    auto one_u = [](const Vector&) { return 1.0; };
    auto one_x = [](const Vector&) { return 1.0; };
    auto x1 = [](const Vector& x) { return x(0); };
    auto x2 = [](const Vector& x) { return x(1); };
    auto x1sq = [](const Vector& x) { return x(0) * x(0); };
    auto u = [](const Vector& v) { return v(0); };
    auto usq = [](const Vector& v) { return v(0) * v(0); };
    auto sinu = [](const Vector& v) { return std::sin(v(0)); };

    SeparableTermList t;
    t.state_dim = 2;
    t.input_dim = 1;
    t.functions = {
        {{one_u, x1, "1", "x1"}},   {{one_u, x2, "1", "x2"}},    {{one_u, x1sq, "1", "x1^2"}},
        {{one_u, one_x, "1", "1"}}, {{u, x1, "u", "x1"}},         {{u, one_x, "u", "1"}},
        {{usq, one_x, "u^2", "1"}}, {{sinu, one_x, "sin u", "1"}},
    };
    return t;
}

}  // namespace dictionaries

}  // namespace kcf
