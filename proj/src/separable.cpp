#include "kcf/separable.hpp"

#include <cmath>

#include "kcf/errors.hpp"

namespace kcf {
namespace {

void check_finite(const Vector& v, std::size_t step_index) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v(i))) throw NonFiniteState(step_index, static_cast<std::size_t>(i));
}

double frobenius_residual(const Matrix& Y, const Matrix& theta, const Matrix& R) { return (Y - theta * R).norm(); }

}  // namespace

StateDecoder decoder_from_head(int state_dim, int lifted_dim, const std::vector<int>& head) {
    StateDecoder d;
    d.D = Matrix::Zero(state_dim, lifted_dim);
    for (std::size_t k = 0; k < head.size(); ++k) d.D(head[k], static_cast<Eigen::Index>(k)) = 1.0;
    d.from_fixed_head = true;
    return d;
}

StateDecoder fit_decoder(const StateDictionary& H, const Matrix& X) {
    const Matrix HX = eval_matrix(H, X);
    StateDecoder d;
    d.D = X * linalg::pinv(HX);
    const double denom = X.norm();
    d.training_residual = denom > 0.0 ? (X - d.D * HX).norm() / denom : 0.0;
    return d;
}

StateDecoder default_decoder(const StateDictionary& H, const Matrix& X) {
    const int n = H.state_dim;
    bool head = static_cast<int>(H.tags.size()) >= n;
    for (int i = 0; head && i < n; ++i) head = H.tags[static_cast<std::size_t>(i)] == "x" + std::to_string(i + 1);
    if (head) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        return decoder_from_head(n, H.dim, idx);
    }
    return fit_decoder(H, X);
}

Matrix SeparableModel::A_of(const Vector& u) const {
    if (!Gtilde || A12.cols() == 0) return A11;
    if (u.size() != Gtilde->input_dim)
        throw DimensionMismatch("input has length " + std::to_string(u.size()) + ", model expects " +
                                std::to_string(Gtilde->input_dim));
    return A11 + A12 * Gtilde->eval(u);
}

SeparableModel extract_normal(const EdmdFit& fit, const NormalDictionary& nd, double source_index) {
    const int s = nd.s();
    const int l = nd.l();
    if (fit.K.rows() != s || fit.K.cols() != s)
        throw DimensionMismatch("extract_normal: fit is " + std::to_string(fit.K.rows()) + "x" +
                                std::to_string(fit.K.cols()) + ", dictionary has s = " + std::to_string(s));
    SeparableModel model;
    model.H = nd.H;
    model.Gtilde = nd.Gtilde;
    model.A11 = fit.K.topLeftCorner(l, l);
    model.A12 = fit.K.topRightCorner(l, s - l);
    model.A21 = fit.K.bottomLeftCorner(s - l, l);
    model.A22 = fit.K.bottomRightCorner(s - l, s - l);
    model.source_index = source_index;
    return model;
}

Matrix extract_pseudoinverse(const Matrix& A, const InputMatrixMap& G, const Vector& u, double tol) {
    const Matrix g = G(u);
    if (A.rows() != g.rows() || A.cols() != g.rows())
        throw DimensionMismatch("extract_pseudoinverse: A must be s x s with s = rows of G(u)");
    const auto rc = check_rank_condition(G, {u}, tol);
    if (!rc.full_rank) {
        std::string where;
        for (Eigen::Index i = 0; i < u.size(); ++i) where += (i ? "," : "") + std::to_string(u(i));
        throw RankDeficientAtInput("G(u) lacks full column rank at u = (" + where + ")");
    }
    const Matrix gtg = g.transpose() * g;
    return gtg.ldlt().solve(g.transpose() * A * g);
}

Rollout rollout(const SeparableModel& model, const Vector& x0, const std::vector<Vector>& inputs) {
    if (x0.size() != model.H.state_dim)
        throw DimensionMismatch("x0 has length " + std::to_string(x0.size()) + ", model expects " +
                                std::to_string(model.H.state_dim));
    Rollout r;
    r.lifted.reserve(inputs.size() + 1);
    r.lifted.push_back(model.H.eval(x0));
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Vector next = model.A_of(inputs[k]) * r.lifted.back();
        check_finite(next, k);
        r.lifted.push_back(std::move(next));
    }
    const auto n = static_cast<Eigen::Index>(model.decoder.D.rows());
    r.states.resize(n, static_cast<Eigen::Index>(r.lifted.size()));
    if (n > 0)
        for (std::size_t k = 0; k < r.lifted.size(); ++k)
            r.states.col(static_cast<Eigen::Index>(k)) = model.decoder.decode(r.lifted[k]);
    return r;
}

double predict_observable(const SeparableModel& model, const Vector& v_h, const Vector& x, const Vector& u) {
    if (v_h.size() != model.l()) throw DimensionMismatch("predict_observable: v_h must have length l");
    return v_h.dot(model.A_of(u) * model.H.eval(x));
}

LinearLiftedModel fit_linear_baseline(const StateDictionary& psi, const SnapshotSet& ss) {
    ss.validate();
    const Matrix PX = eval_matrix(psi, ss.X);
    const Matrix PXp = eval_matrix(psi, ss.Xplus);
    const Eigen::Index np = PX.rows();
    const Eigen::Index m = ss.U.rows();
    Matrix R(np + m, ss.size());
    R << PX, ss.U;
    if (R.size() == 0 || R.cwiseAbs().maxCoeff() == 0.0) throw DegenerateData("linear baseline: regressor is zero");
    const auto svd = linalg::truncated_svd(R);
    const Matrix theta = PXp * svd.V * svd.sigma.cwiseInverse().asDiagonal() * svd.U.transpose();
    LinearLiftedModel model;
    model.psi = psi;
    model.A = theta.leftCols(np);
    model.B = theta.rightCols(m);
    model.advisory = svd.rank() < R.rows();
    model.residual = frobenius_residual(PXp, theta, R);
    return model;
}

Vector BilinearLiftedModel::step(const Vector& z, const Vector& u) const {
    Vector next = A * z;
    for (std::size_t i = 0; i < B.size(); ++i) next += u(static_cast<Eigen::Index>(i)) * (B[i] * z);
    if (C) next += *C * u;
    return next;
}

Matrix BilinearLiftedModel::as_separable(const Vector& u) const {
    const Eigen::Index np = A.rows();
    Matrix out = Matrix::Zero(np + 1, np + 1);
    out.topLeftCorner(np, np) = A;
    for (std::size_t i = 0; i < B.size(); ++i) out.topLeftCorner(np, np) += u(static_cast<Eigen::Index>(i)) * B[i];
    if (C) out.topRightCorner(np, 1) = *C * u;
    out(np, np) = 1.0;
    return out;
}

BilinearLiftedModel fit_bilinear_baseline(const StateDictionary& psi, const SnapshotSet& ss, bool with_affine) {
    ss.validate();
    const Matrix PX = eval_matrix(psi, ss.X);
    const Matrix PXp = eval_matrix(psi, ss.Xplus);
    const Eigen::Index np = PX.rows();
    const Eigen::Index m = ss.U.rows();
    const Eigen::Index rows = np * (1 + m) + (with_affine ? m : 0);
    Matrix R(rows, ss.size());
    R.topRows(np) = PX;
    for (Eigen::Index i = 0; i < m; ++i)
        R.middleRows(np * (1 + i), np) = PX.array().rowwise() * ss.U.row(i).array();
    if (with_affine) R.bottomRows(m) = ss.U;
    if (R.cwiseAbs().maxCoeff() == 0.0) throw DegenerateData("bilinear baseline: regressor is zero");
    const auto svd = linalg::truncated_svd(R);
    const Matrix theta = PXp * svd.V * svd.sigma.cwiseInverse().asDiagonal() * svd.U.transpose();
    BilinearLiftedModel model;
    model.psi = psi;
    model.A = theta.leftCols(np);
    for (Eigen::Index i = 0; i < m; ++i) model.B.push_back(theta.middleCols(np * (1 + i), np));
    if (with_affine) model.C = theta.rightCols(m);
    model.advisory = svd.rank() < R.rows();
    model.residual = frobenius_residual(PXp, theta, R);
    return model;
}

const Matrix& SwitchedLinearModel::A(const Vector& u) const {
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (inputs[i].size() == u.size() && inputs[i] == u) return matrices[i];
    throw UnknownInputValue("switched model has no matrix for this input value");
}

SwitchedLinearModel switched_from_constant_inputs(const StateDictionary& psi, const std::vector<SnapshotSet>& subsets) {
    SwitchedLinearModel model;
    model.psi = psi;
    for (const auto& ss : subsets) {
        ss.validate();
        if (ss.size() == 0) throw DegenerateData("switched model: empty subset");
        const Vector u = ss.U.col(0);
        for (Eigen::Index c = 1; c < ss.size(); ++c)
            if (ss.U.col(c) != u) throw ConfigError("switched model: subset input is not constant");
        const EdmdFit fit = fit_edmd(eval_matrix(psi, ss.X), eval_matrix(psi, ss.Xplus));
        model.inputs.push_back(u);
        model.matrices.push_back(fit.K);
    }
    return model;
}

std::string model_kind(const AnyModel& model) {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SeparableModel>) return "separable";
            else if constexpr (std::is_same_v<T, LinearLiftedModel>) return "linear";
            else return "bilinear";
        },
        model);
}

Matrix rollout_states(const AnyModel& any, const Vector& x0, const std::vector<Vector>& inputs) {
    if (const auto* sep = std::get_if<SeparableModel>(&any)) return rollout(*sep, x0, inputs).states;
    return std::visit(
        [&](const auto& m) -> Matrix {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SeparableModel>) {
                return {};
            } else {
                if (x0.size() != m.psi.state_dim)
                    throw DimensionMismatch("x0 has length " + std::to_string(x0.size()) + ", model expects " +
                                            std::to_string(m.psi.state_dim));
                Vector z = m.psi.eval(x0);
                Matrix states(m.decoder.D.rows(), static_cast<Eigen::Index>(inputs.size() + 1));
                states.col(0) = m.decoder.decode(z);
                for (std::size_t k = 0; k < inputs.size(); ++k) {
                    const Eigen::Index m_in = [&] {
                        if constexpr (std::is_same_v<T, LinearLiftedModel>) return m.B.cols();
                        else return static_cast<Eigen::Index>(m.B.size());
                    }();
                    if (inputs[k].size() != m_in)
                        throw DimensionMismatch("input has length " + std::to_string(inputs[k].size()) +
                                                ", model expects " + std::to_string(m_in));
                    z = m.step(z, inputs[k]);
                    check_finite(z, k);
                    states.col(static_cast<Eigen::Index>(k + 1)) = m.decoder.decode(z);
                }
                return states;
            }
        },
        any);
}

}  // namespace kcf
