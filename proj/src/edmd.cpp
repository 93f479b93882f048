#include "kcf/edmd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kcf/errors.hpp"

namespace kcf {
namespace {

void check_shapes(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch("EDMD: Psi(X) is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " but Psi(X+) is " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

double relative_min_sv(const linalg::Svd& svd) {
    return svd.sigma_max == 0.0 ? 0.0 : svd.sigma_min_full / svd.sigma_max;
}

RankReport make_rank_report(const linalg::Svd& sx, const linalg::Svd& sp, Eigen::Index s, Eigen::Index N) {
    RankReport r;
    r.row_rank_ok_X = sx.rank() == s;
    r.row_rank_ok_Xplus = sp.rank() == s;
    // fewer samples than rows: the missing singular values are zero
    r.min_singular_X = N >= s ? relative_min_sv(sx) : 0.0;
    r.min_singular_Xplus = N >= s ? relative_min_sv(sp) : 0.0;
    return r;
}

// Deterministic choice among (possibly several) maximizers: largest absolute
// first nonzero entry, then sign-normalized to make that entry positive.
Vector pick_maximizer(const std::vector<Vector>& candidates) {
    auto first_nonzero = [](const Vector& v) -> Eigen::Index {
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (std::abs(v(i)) > 1e-12) return i;
        return v.size();
    };
    auto key_less = [&](const Vector& a, const Vector& b) {
        const Eigen::Index ia = first_nonzero(a), ib = first_nonzero(b);
        if (ia != ib) return ia > ib;  // earlier nonzero wins
        for (Eigen::Index i = ia; i < a.size(); ++i) {
            const double da = std::abs(a(i)), db = std::abs(b(i));
            if (std::abs(da - db) > 1e-12) return da < db;
        }
        return false;
    };
    Vector best = candidates.front();
    for (std::size_t k = 1; k < candidates.size(); ++k)
        if (key_less(best, candidates[k])) best = candidates[k];
    const Eigen::Index i = first_nonzero(best);
    if (i < best.size() && best(i) < 0.0) best = -best;
    return best;
}

}  // namespace

EdmdFit fit_edmd(const Matrix& Psi_X, const Matrix& Psi_Xplus, const EdmdOptions& opts) {
    check_shapes(Psi_X, Psi_Xplus);
    if (Psi_X.size() == 0 || Psi_X.cwiseAbs().maxCoeff() == 0.0)
        throw DegenerateData("EDMD: Psi(X) is identically zero");
    const auto sx = linalg::truncated_svd(Psi_X, opts.pinv_cutoff);
    const auto sp = linalg::truncated_svd(Psi_Xplus, opts.pinv_cutoff);
    EdmdFit fit;
    fit.K = (Psi_Xplus * sx.V) * sx.sigma.cwiseInverse().asDiagonal() * sx.U.transpose();
    fit.rank_report = make_rank_report(sx, sp, Psi_X.rows(), Psi_X.cols());
    return fit;
}

ConsistencyReport consistency_index(const Matrix& Psi_X, const Matrix& Psi_Xplus, const EdmdOptions& opts) {
    check_shapes(Psi_X, Psi_Xplus);
    if (Psi_X.size() == 0 || Psi_X.cwiseAbs().maxCoeff() == 0.0 || Psi_Xplus.cwiseAbs().maxCoeff() == 0.0)
        throw DegenerateData("consistency index: a data matrix is identically zero");

    const Eigen::Index s = Psi_X.rows();
    const auto sx = linalg::truncated_svd(Psi_X, opts.pinv_cutoff);
    const auto sp = linalg::truncated_svd(Psi_Xplus, opts.pinv_cutoff);

    ConsistencyReport rep;
    rep.rank_report = make_rank_report(sx, sp, s, Psi_X.cols());
    const Matrix pinv_X = sx.V * sx.sigma.cwiseInverse().asDiagonal() * sx.U.transpose();
    const Matrix pinv_Xp = sp.V * sp.sigma.cwiseInverse().asDiagonal() * sp.U.transpose();
    rep.K_F = Psi_Xplus * pinv_X;
    rep.K_B = Psi_X * pinv_Xp;
    const Matrix raw = Matrix::Identity(s, s) - rep.K_F * rep.K_B;
    rep.asymmetry = (raw - raw.transpose()).cwiseAbs().maxCoeff();

    // K_F K_B = U+ S+ (C^T C) S+^{-1} U+^T with C = V_X^T V_X+, so M_C is similar
    // to the symmetric I - U+ C^T C U+^T; its spectrum is 1 - sigma_i(C)^2 on
    // range(U+) and 1 on the complement. 1 - sigma^2 is taken from the singular
    // values of V_X+ - V_X C (sines of the principal angles), which stay accurate
    // when the subspaces nearly coincide.
    const Matrix C = sx.V.transpose() * sp.V;  // rx x rp
    const Eigen::Index rp = sp.rank();
    const Matrix S = sp.V - sx.V * C;
    Eigen::BDCSVD<Matrix> ssvd(S, Eigen::ComputeThinV);

    // eigenpairs in coefficient space: w = U+ S+^{-1} y for right singular vectors y
    struct Pair {
        double lambda;
        Vector w;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(s));
    const Matrix& Vs = ssvd.matrixV();
    for (Eigen::Index i = 0; i < rp; ++i) {
        const double sine = ssvd.singularValues()(i);
        Vector w = sp.U * (sp.sigma.cwiseInverse().asDiagonal() * Vs.col(i));
        pairs.push_back({sine * sine, w.normalized()});
    }
    if (rp < s) {
        // directions with w^T Psi(X+) = 0: the orthogonal complement of range(U+)
        Eigen::JacobiSVD<Matrix> full(Psi_Xplus, Eigen::ComputeFullU);
        for (Eigen::Index i = rp; i < s; ++i) pairs.push_back({1.0, full.matrixU().col(i)});
    }

    rep.pre_clamp_max = -std::numeric_limits<double>::infinity();
    rep.pre_clamp_min = std::numeric_limits<double>::infinity();
    for (const auto& p : pairs) {
        rep.pre_clamp_max = std::max(rep.pre_clamp_max, p.lambda);
        rep.pre_clamp_min = std::min(rep.pre_clamp_min, p.lambda);
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.lambda > b.lambda; });

    rep.eigenvalues.resize(s);
    double trace = 0.0;
    for (Eigen::Index i = 0; i < s; ++i) {
        rep.eigenvalues(i) = std::clamp(pairs[static_cast<std::size_t>(i)].lambda, 0.0, 1.0);
        trace += rep.eigenvalues(i);
    }
    rep.index = rep.eigenvalues(0);
    rep.sqrt_index = std::sqrt(rep.index);
    rep.trace_upper = trace;
    rep.trace_lower = trace / static_cast<double>(s);

    std::vector<Vector> top;
    for (const auto& p : pairs)
        if (std::clamp(p.lambda, 0.0, 1.0) >= rep.index - 1e-12) top.push_back(p.w);
    rep.worst_coeffs = pick_maximizer(top);
    return rep;
}

ConsistencyReport invariance_proximity(const NormalDictionary& nd, const AugmentedSnapshots& aug,
                                       const EdmdOptions& opts) {
    return consistency_index(nd.eval_matrix(aug.Z), nd.eval_matrix(aug.Zplus), opts);
}

double predict_function(const EdmdFit& fit, const Vector& w, const Vector& Psi_x) {
    if (w.size() != fit.K.rows() || Psi_x.size() != fit.K.cols())
        throw DimensionMismatch("predict_function: vector sizes do not match K");
    return w.dot(fit.K * Psi_x);
}

ProjectionResidual projection_residual(const EdmdFit& fit, const Matrix& Psi_X, const Matrix& Psi_Xplus) {
    check_shapes(Psi_X, Psi_Xplus);
    ProjectionResidual r;
    r.residual = Psi_Xplus - fit.K * Psi_X;
    r.column_norms = r.residual.colwise().norm().transpose();
    r.frobenius = r.residual.norm();
    return r;
}

double relative_prediction_error(const Matrix& K, const Matrix& Psi_X, const Matrix& Psi_Xplus, const Vector& w) {
    const Vector truth = Psi_Xplus.transpose() * w;
    const Vector pred = Psi_X.transpose() * (K.transpose() * w);
    const double den = truth.norm();
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (truth - pred).norm() / den;
}

}  // namespace kcf
