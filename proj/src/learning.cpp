#include "kcf/learning.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "kcf/errors.hpp"

namespace kcf {

std::string to_string(LossMode mode) { return mode == LossMode::Trace ? "trace" : "max_eig"; }

LossMode parse_loss_mode(const std::string& s) {
    if (s == "trace") return LossMode::Trace;
    if (s == "max_eig") return LossMode::MaxEig;
    throw ConfigError("unknown loss mode '" + s + "' (expected trace or max_eig)");
}

void TrainConfig::validate(Eigen::Index num_snapshots) const {
    family.validate();
    if (l < 1 || s < l) throw ConfigError("train config: need 1 <= l <= s");
    if (epochs < 0) throw ConfigError("train config: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (!(lr_end > 0.0) || !(lr_end <= lr_start)) throw ConfigError("train config: need 0 < lr_end <= lr_start");
    if (!(train_fraction > 0.0) || !(train_fraction <= 1.0)) throw ConfigError("train config: train_fraction in (0, 1]");
    if (num_snapshots >= 0 && batch_size > num_snapshots)
        throw ConfigError("train config: batch_size exceeds the number of training snapshots");
}

namespace {

struct Surrogate {
    Eigen::Index s;
    Matrix M1, M2, Cap;
    double ea, ep;
};

Surrogate prepare(const Matrix& A, const Matrix& P, double ridge) {
    Surrogate sg;
    sg.s = A.rows();
    const auto sd = static_cast<double>(sg.s);
    Matrix Ga = A * A.transpose();
    Matrix Gp = P * P.transpose();
    sg.ea = ridge * Ga.trace() / sd;
    sg.ep = ridge * Gp.trace() / sd;
    Ga.diagonal().array() += sg.ea;
    Gp.diagonal().array() += sg.ep;
    const Matrix I = Matrix::Identity(sg.s, sg.s);
    Eigen::LDLT<Matrix> la(Ga), lp(Gp);
    sg.M1 = la.solve(I);
    sg.M2 = lp.solve(I);
    sg.Cap = A * P.transpose();
    return sg;
}

void check_batch(const Matrix& A, const Matrix& P) {
    if (A.rows() != P.rows() || A.cols() != P.cols()) throw DimensionMismatch("surrogate: Phi and Phi+ differ in shape");
    if (A.rows() == 0) throw DimensionMismatch("surrogate: empty dictionary");
}

}  // namespace

double surrogate_loss(const Matrix& Phi, const Matrix& PhiPlus, LossMode mode, double ridge) {
    check_batch(Phi, PhiPlus);
    const Surrogate sg = prepare(Phi, PhiPlus, ridge);
    const Matrix KFKB = sg.Cap.transpose() * sg.M1 * sg.Cap * sg.M2;
    double value = 0.0;
    if (mode == LossMode::Trace) {
        value = static_cast<double>(sg.s) - KFKB.trace();
    } else {
        // K_F K_B = Cpa M1 Cap Gp^{-1} is similar to the symmetric L^{-1} Cpa M1 Cap L^{-T}, Gp = L L^T
        Matrix Gp = PhiPlus * PhiPlus.transpose();
        Gp.diagonal().array() += sg.ep;
        Eigen::LLT<Matrix> llt(Gp);
        Matrix S = sg.Cap.transpose() * sg.M1 * sg.Cap;
        Matrix T = llt.matrixL().solve(S);
        T = llt.matrixL().solve(T.transpose()).transpose();
        T = 0.5 * (T + T.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(T, Eigen::EigenvaluesOnly);
        value = 1.0 - eig.eigenvalues()(0);
    }
    if (!std::isfinite(value)) throw NonFiniteLoss("surrogate loss is not finite");
    return value;
}

LossGradient surrogate_trace_gradient(const Matrix& Phi, const Matrix& PhiPlus, double ridge) {
    check_batch(Phi, PhiPlus);
    const Surrogate sg = prepare(Phi, PhiPlus, ridge);
    const auto sd = static_cast<double>(sg.s);
    const Matrix Cpa = sg.Cap.transpose();
    // T = Tr(Cpa M1 Cap M2), loss = s - T
    const Matrix M1CapM2 = sg.M1 * sg.Cap * sg.M2;
    const Matrix M2CpaM1 = M1CapM2.transpose();
    const Matrix W = M1CapM2 * Cpa * sg.M1;   // M1 Cap M2 Cpa M1
    const Matrix Wp = M2CpaM1 * sg.Cap * sg.M2;  // M2 Cpa M1 Cap M2
    LossGradient out;
    out.value = sd - (M1CapM2 * Cpa).trace();
    const double ca = 2.0 * ridge / sd * W.trace();
    const double cp = 2.0 * ridge / sd * Wp.trace();
    const Matrix dTdA = 2.0 * M1CapM2 * PhiPlus - 2.0 * W * Phi - ca * Phi;
    const Matrix dTdP = 2.0 * M2CpaM1 * Phi - 2.0 * Wp * PhiPlus - cp * PhiPlus;
    out.dPhi = -dTdA;
    out.dPhiPlus = -dTdP;
    if (!std::isfinite(out.value)) throw NonFiniteLoss("surrogate loss is not finite");
    return out;
}

double loss(const ParametricDictionary& dict, const AugmentedSnapshots& batch, LossMode mode, double ridge) {
    const auto pass = dict.forward(batch.states(), batch.next_states(), batch.inputs());
    return surrogate_loss(pass.Phi, pass.PhiPlus, mode, ridge);
}

Vector loss_gradient(const ParametricDictionary& dict, const AugmentedSnapshots& batch, double ridge) {
    const auto pass = dict.forward(batch.states(), batch.next_states(), batch.inputs());
    const LossGradient g = surrogate_trace_gradient(pass.Phi, pass.PhiPlus, ridge);
    Vector grad = dict.backward(pass, g.dPhi, g.dPhiPlus);
    if (!grad.allFinite()) throw NonFiniteGradient("loss gradient is not finite");
    return grad;
}

namespace {

std::vector<Eigen::Index> permutation(Eigen::Index n, UniformSampler& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

Vector to_vector(const std::vector<double>& v, Eigen::Index n) {
    if (v.empty()) return Vector::Ones(n);
    if (static_cast<Eigen::Index>(v.size()) != n) throw ConfigError("scaling vector has wrong length");
    return Eigen::Map<const Vector>(v.data(), n);
}

struct Adam {
    Vector m, v;
    int t = 0;
    static constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    explicit Adam(Eigen::Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}

    void step(Vector& params, const Vector& grad, double lr) {
        ++t;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(beta1, t);
        const double c2 = 1.0 - std::pow(beta2, t);
        params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
};

double schedule(const TrainConfig& c, int epoch) {
    if (c.epochs <= 1) return c.lr_start;
    return c.lr_start + (c.lr_end - c.lr_start) * static_cast<double>(epoch) / static_cast<double>(c.epochs - 1);
}

double clamp01(double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 1.0; }

// Validation quantity of the separable dictionary: sqrt of the pinv-defined index.
double proximity_on(const ParametricDictionary& dict, const AugmentedSnapshots& data) {
    try {
        const auto pass = dict.forward(data.states(), data.next_states(), data.inputs());
        return clamp01(consistency_index(pass.Phi, pass.PhiPlus).sqrt_index);
    } catch (const Error&) {
        return 1.0;
    }
}

using BatchFn = std::function<double(const ParametricDictionary&, const AugmentedSnapshots&, Vector*)>;
using ValFn = std::function<std::pair<double, double>(const ParametricDictionary&)>;  // (val_loss, selection metric)

TrainReport adam_loop(ParametricDictionary& dict, const TrainConfig& c, const AugmentedSnapshots& train_data,
                      const BatchFn& batch_fn, const ValFn& val_fn) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    Adam opt(dict.num_params());
    UniformSampler rng(c.seed ^ 0x5deece66dULL);
    const Eigen::Index N = train_data.size();
    const Eigen::Index bs = std::min<Eigen::Index>(c.batch_size, N);
    const Eigen::Index nb = std::max<Eigen::Index>(1, N / bs);

    Vector best = dict.params();
    double best_metric = std::numeric_limits<double>::infinity();
    int consecutive_bad = 0;

    for (int e = 0; e < c.epochs && !report.aborted; ++e) {
        const double lr = schedule(c, e);
        const auto perm = permutation(N, rng);
        double total = 0.0;
        int counted = 0;
        for (Eigen::Index b = 0; b < nb; ++b) {
            std::vector<Eigen::Index> cols(perm.begin() + b * bs, perm.begin() + (b + 1) * bs);
            const AugmentedSnapshots batch = train_data.select(cols);
            Vector grad;
            double value = std::numeric_limits<double>::quiet_NaN();
            try {
                value = batch_fn(dict, batch, &grad);
            } catch (const NonFiniteLoss&) {
            } catch (const NonFiniteGradient&) {
            }
            if (!std::isfinite(value) || grad.size() != dict.num_params() || !grad.allFinite()) {
                ++report.nonfinite_batches;
                if (++consecutive_bad > 3) {
                    report.aborted = true;
                    report.abort_reason = "more than 3 consecutive non-finite batches (parameter norm " +
                                          std::to_string(dict.params().norm()) + ")";
                    break;
                }
                continue;
            }
            consecutive_bad = 0;
            total += value;
            ++counted;
            opt.step(dict.params(), grad, lr);
        }
        EpochRecord rec;
        rec.epoch = e;
        rec.lr = lr;
        rec.train_loss = counted ? total / counted : std::numeric_limits<double>::quiet_NaN();
        const auto [vloss, metric] = val_fn(dict);
        rec.val_loss = vloss;
        rec.val_proximity = metric;
        report.epochs.push_back(rec);
        if (metric < best_metric) {
            best_metric = metric;
            best = dict.params();
            report.best_epoch = e;
        }
    }
    dict.params() = best;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace

std::pair<AugmentedSnapshots, AugmentedSnapshots> split_train_test(const AugmentedSnapshots& data, double train_fraction,
                                                                   std::uint64_t seed) {
    UniformSampler rng(seed ^ 0x2545f4914f6cdd1dULL);
    const auto perm = permutation(data.size(), rng);
    const auto ntrain = static_cast<Eigen::Index>(std::llround(train_fraction * static_cast<double>(data.size())));
    std::vector<Eigen::Index> a(perm.begin(), perm.begin() + ntrain);
    std::vector<Eigen::Index> b(perm.begin() + ntrain, perm.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {data.select(a), data.select(b)};
}

ParametricDictionary make_dictionary(const TrainConfig& c, int state_dim, int input_dim) {
    ParametricDictionary dict(c.family, state_dim, input_dim, c.s, c.l, c.fixed_head);
    dict.x_scale = to_vector(c.x_scale, state_dim);
    dict.u_scale = to_vector(c.u_scale, input_dim);
    dict.initialize(c.seed);
    return dict;
}

TrainResult train(const TrainConfig& c, const AugmentedSnapshots& train_data, const AugmentedSnapshots& test_data) {
    c.validate(train_data.size());
    if (c.loss_mode != LossMode::Trace) throw ConfigError("train: only the trace loss has a gradient");
    ParametricDictionary dict = make_dictionary(c, train_data.state_dim, train_data.input_dim);
    dict.head_scaled = true;

    const BatchFn batch_fn = [&](const ParametricDictionary& d, const AugmentedSnapshots& batch, Vector* grad) {
        const auto pass = d.forward(batch.states(), batch.next_states(), batch.inputs());
        const LossGradient g = surrogate_trace_gradient(pass.Phi, pass.PhiPlus, c.ridge);
        *grad = d.backward(pass, g.dPhi, g.dPhiPlus);
        return g.value;
    };
    const ValFn val_fn = [&](const ParametricDictionary& d) -> std::pair<double, double> {
        const auto& v = test_data.size() > 0 ? test_data : train_data;
        double vl = std::numeric_limits<double>::quiet_NaN();
        try {
            vl = loss(d, v, LossMode::Trace, c.ridge);
        } catch (const Error&) {
        }
        return {vl, proximity_on(d, v)};
    };

    TrainResult out{dict, {}};
    out.report = adam_loop(out.dictionary, c, train_data, batch_fn, val_fn);
    out.dictionary.head_scaled = false;  // back to original coordinates
    out.report.final_train_proximity = proximity_on(out.dictionary, train_data);
    out.report.final_test_proximity =
        test_data.size() > 0 ? proximity_on(out.dictionary, test_data) : out.report.final_train_proximity;
    return out;
}

double baseline_loss(const ParametricDictionary& psi, const AugmentedSnapshots& batch, BaselineKind kind,
                     Vector* gradient, double ridge) {
    const auto pass = psi.forward(batch.states(), batch.next_states(), batch.inputs());
    const Matrix& PX = pass.Phi;
    const Matrix& Y = pass.PhiPlus;
    const Matrix U = batch.inputs();
    const Eigen::Index np = PX.rows();
    const Eigen::Index m = U.rows();
    const Eigen::Index B = PX.cols();
    const Eigen::Index rows = kind == BaselineKind::Linear ? np + m : np * (1 + m);

    Matrix R(rows, B);
    R.topRows(np) = PX;
    if (kind == BaselineKind::Linear) {
        R.bottomRows(m) = U;
    } else {
        for (Eigen::Index i = 0; i < m; ++i) R.middleRows(np * (1 + i), np) = PX.array().rowwise() * U.row(i).array();
    }
    Matrix G = R * R.transpose();
    const double lambda = ridge * G.trace() / static_cast<double>(rows);
    G.diagonal().array() += lambda;
    const Matrix theta = G.ldlt().solve(R * Y.transpose()).transpose();
    const Matrix E = Y - theta * R;
    const double inv_b = 1.0 / static_cast<double>(B);
    const double value = (E.squaredNorm() + lambda * theta.squaredNorm()) * inv_b;
    if (!std::isfinite(value)) throw NonFiniteLoss("baseline loss is not finite");
    if (gradient) {
        // envelope: theta is optimal, so only the explicit dependence on (Y, R, lambda) remains
        const Matrix dY = 2.0 * inv_b * E;
        const Matrix dR = inv_b * (-2.0 * theta.transpose() * E +
                                   theta.squaredNorm() * (2.0 * ridge / static_cast<double>(rows)) * R);
        Matrix dPX = dR.topRows(np);
        if (kind == BaselineKind::Bilinear)
            for (Eigen::Index i = 0; i < m; ++i)
                dPX.array() += dR.middleRows(np * (1 + i), np).array().rowwise() * U.row(i).array();
        *gradient = psi.backward(pass, dPX, dY);
        if (!gradient->allFinite()) throw NonFiniteGradient("baseline gradient is not finite");
    }
    return value;
}

TrainResult train_baseline(const TrainConfig& c, BaselineKind kind, const AugmentedSnapshots& train_data,
                           const AugmentedSnapshots& test_data) {
    TrainConfig bc = c;
    bc.s = c.l;
    bc.validate(train_data.size());
    ParametricDictionary psi = make_dictionary(bc, train_data.state_dim, train_data.input_dim);
    psi.head_scaled = true;

    const BatchFn batch_fn = [&](const ParametricDictionary& d, const AugmentedSnapshots& batch, Vector* grad) {
        return baseline_loss(d, batch, kind, grad, c.ridge);
    };
    const ValFn val_fn = [&](const ParametricDictionary& d) -> std::pair<double, double> {
        const auto& v = test_data.size() > 0 ? test_data : train_data;
        double vl = std::numeric_limits<double>::infinity();
        try {
            vl = baseline_loss(d, v, kind, nullptr, c.ridge);
        } catch (const Error&) {
        }
        return {vl, vl};
    };
    TrainResult out{psi, {}};
    out.report = adam_loop(out.dictionary, bc, train_data, batch_fn, val_fn);
    out.dictionary.head_scaled = false;
    return out;
}

SnapshotSet to_snapshots(const AugmentedSnapshots& aug) {
    SnapshotSet ss;
    ss.X = aug.states();
    ss.Xplus = aug.next_states();
    ss.U = aug.inputs();
    ss.Uplus = ss.U;
    return ss;
}

PipelineResult pipeline(const TrainConfig& c, const AugmentedSnapshots& data) {
    auto [train_data, test_data] = split_train_test(data, c.train_fraction, c.seed);
    TrainResult sep = train(c, train_data, test_data);
    TrainResult lin = train_baseline(c, BaselineKind::Linear, train_data, test_data);
    TrainResult bil = train_baseline(c, BaselineKind::Bilinear, train_data, test_data);

    const NormalDictionary nd = sep.dictionary.as_normal();
    const Matrix Phi = sep.dictionary.eval(train_data.Z);
    const Matrix PhiPlus = sep.dictionary.eval(train_data.Zplus);
    const EdmdFit fit = fit_edmd(Phi, PhiPlus);

    PipelineResult out{.separable = {},
                       .linear = {},
                       .bilinear = {},
                       .report = sep.report,
                       .linear_report = lin.report,
                       .bilinear_report = bil.report,
                       .dictionary = sep.dictionary,
                       .linear_dictionary = lin.dictionary,
                       .bilinear_dictionary = bil.dictionary,
                       .train_consistency = consistency_index(Phi, PhiPlus),
                       .test_consistency = {}};
    if (test_data.size() > 0)
        out.test_consistency = consistency_index(sep.dictionary.eval(test_data.Z), sep.dictionary.eval(test_data.Zplus));
    else
        out.test_consistency = out.train_consistency;

    const int n = data.state_dim;
    out.separable = extract_normal(fit, nd, out.train_consistency.sqrt_index);
    out.separable.decoder = c.fixed_head.size() >= static_cast<std::size_t>(n)
                                ? decoder_from_head(n, c.l, c.fixed_head)
                                : fit_decoder(nd.H, train_data.states());

    const SnapshotSet train_ss = to_snapshots(train_data);
    const StateDictionary psi_l = lin.dictionary.as_normal().H;
    const StateDictionary psi_b = bil.dictionary.as_normal().H;
    out.linear = fit_linear_baseline(psi_l, train_ss);
    out.bilinear = fit_bilinear_baseline(psi_b, train_ss);
    const bool head = c.fixed_head.size() >= static_cast<std::size_t>(n);
    out.linear.decoder = head ? decoder_from_head(n, c.l, c.fixed_head) : fit_decoder(psi_l, train_ss.X);
    out.bilinear.decoder = head ? decoder_from_head(n, c.l, c.fixed_head) : fit_decoder(psi_b, train_ss.X);
    return out;
}

FixedPipelineResult pipeline_fixed(const NormalDictionary& nd, const AugmentedSnapshots& train_data) {
    FixedPipelineResult out;
    const Matrix Phi = nd.eval_matrix(train_data.Z);
    const Matrix PhiPlus = nd.eval_matrix(train_data.Zplus);
    out.train_consistency = consistency_index(Phi, PhiPlus);
    out.separable = extract_normal(fit_edmd(Phi, PhiPlus), nd, out.train_consistency.sqrt_index);
    out.separable.decoder = default_decoder(nd.H, train_data.states());
    const SnapshotSet ss = to_snapshots(train_data);
    out.linear = fit_linear_baseline(nd.H, ss);
    out.linear.decoder = out.separable.decoder;
    out.bilinear = fit_bilinear_baseline(nd.H, ss);
    out.bilinear.decoder = out.separable.decoder;
    return out;
}

std::vector<Vector> comparison_inputs(const ControlSystem& sys, int steps, std::uint64_t seed) {
    UniformSampler rng(seed);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) out.push_back(rng.sample(sys.input_box));
    return out;
}

Comparison compare_models(const ControlSystem& sys, const std::vector<std::pair<std::string, AnyModel>>& models,
                          const std::vector<Vector>& x0s, const std::vector<Vector>& inputs) {
    Comparison cmp;
    cmp.x0s = x0s;
    cmp.inputs = inputs;
    for (const auto& x0 : x0s) {
        const Trajectory t = simulate(sys, x0, inputs);
        Matrix m(sys.state_dim, static_cast<Eigen::Index>(t.states.size()));
        for (std::size_t k = 0; k < t.states.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = t.states[k];
        cmp.truth.push_back(std::move(m));
    }
    for (const auto& [name, model] : models) {
        ComparisonRow row;
        row.model = name;
        Vector sq = Vector::Zero(sys.state_dim);
        double count = 0.0;
        bool diverged = false;
        std::vector<Matrix> preds;
        for (std::size_t i = 0; i < x0s.size(); ++i) {
            Matrix p;
            try {
                p = rollout_states(model, x0s[i], inputs);
            } catch (const NonFiniteState&) {
                diverged = true;
                p = Matrix::Constant(sys.state_dim, cmp.truth[i].cols(), std::numeric_limits<double>::quiet_NaN());
            }
            const Matrix err = (p - cmp.truth[i]).rightCols(p.cols() - 1);
            sq += err.rowwise().squaredNorm();
            count += static_cast<double>(err.cols());
            preds.push_back(std::move(p));
        }
        for (int d = 0; d < sys.state_dim; ++d)
            row.rmse.push_back(diverged ? std::numeric_limits<double>::infinity() : std::sqrt(sq(d) / count));
        cmp.rows.push_back(std::move(row));
        cmp.predictions.push_back(std::move(preds));
    }
    return cmp;
}

}  // namespace kcf
