#include "kcf/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kcf/errors.hpp"

namespace kcf {
namespace {

void check_finite(const Vector& v, std::size_t step_index) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v(i))) throw NonFiniteState(step_index, static_cast<std::size_t>(i));
}

}  // namespace

void SnapshotSet::validate() const {
    const auto n = X.cols();
    if (Xplus.cols() != n || U.cols() != n || Uplus.cols() != n)
        throw DimensionMismatch("snapshot matrices have different column counts");
    if (Xplus.rows() != X.rows() || Uplus.rows() != U.rows())
        throw DimensionMismatch("snapshot matrices have inconsistent row counts");
    if (Uplus != U) throw DimensionMismatch("U+ must equal U for constant-input snapshots");
}

SnapshotSet SnapshotSet::select(const std::vector<Eigen::Index>& cols) const {
    SnapshotSet out = *this;
    out.X = X(Eigen::all, cols);
    out.Xplus = Xplus(Eigen::all, cols);
    out.U = U(Eigen::all, cols);
    out.Uplus = Uplus(Eigen::all, cols);
    return out;
}

AugmentedSnapshots AugmentedSnapshots::select(const std::vector<Eigen::Index>& cols) const {
    AugmentedSnapshots out;
    out.Z = Z(Eigen::all, cols);
    out.Zplus = Zplus(Eigen::all, cols);
    out.state_dim = state_dim;
    out.input_dim = input_dim;
    return out;
}

bool in_box(const Box& box, const Vector& v) {
    if (box.empty()) return true;
    for (Eigen::Index i = 0; i < v.size() && i < static_cast<Eigen::Index>(box.size()); ++i)
        if (v(i) < box[i].lo || v(i) > box[i].hi) return false;
    return true;
}

double UniformSampler::uniform(double lo, double hi) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
}

Vector UniformSampler::sample(const Box& box) {
    Vector v(static_cast<Eigen::Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i) v(static_cast<Eigen::Index>(i)) = uniform(box[i].lo, box[i].hi);
    return v;
}

Vector step(const ControlSystem& sys, const Vector& x, const Vector& u) {
    if (x.size() != sys.state_dim || u.size() != sys.input_dim)
        throw DimensionMismatch("step: state/input dimension does not match system " + sys.name);
    Vector next = sys.step_map(x, u);
    check_finite(next, 0);
    return next;
}

std::pair<Vector, Vector> augmented_step(const ControlSystem& sys, const Vector& x, const Vector& u) {
    return {step(sys, x, u), u};
}

Trajectory simulate(const ControlSystem& sys, const Vector& x0, const std::vector<Vector>& inputs) {
    if (inputs.empty()) throw ConfigError("simulate: input sequence is empty");
    Trajectory traj;
    traj.states.reserve(inputs.size() + 1);
    traj.states.push_back(x0);
    traj.inputs = inputs;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Vector next;
        try {
            next = step(sys, traj.states.back(), inputs[k]);
        } catch (const NonFiniteState& e) {
            throw NonFiniteState(k, e.coordinate);
        }
        if (!in_box(sys.state_box, next)) ++traj.out_of_box;
        traj.states.push_back(std::move(next));
    }
    return traj;
}

Vector rk4_step(const OdeRhs& rhs, const Vector& x, const Vector& u, double dt) {
    const Vector k1 = rhs(x, u);
    const Vector k2 = rhs(x + 0.5 * dt * k1, u);
    const Vector k3 = rhs(x + 0.5 * dt * k2, u);
    const Vector k4 = rhs(x + dt * k3, u);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

ControlSystem discretize_rk4(OdeRhs rhs, double dt, int state_dim, int input_dim) {
    if (!(dt > 0.0)) throw ConfigError("discretize_rk4: dt must be positive");
    ControlSystem sys;
    sys.name = "rk4";
    sys.state_dim = state_dim;
    sys.input_dim = input_dim;
    sys.dt = dt;
    sys.step_map = [rhs = std::move(rhs), dt](const Vector& x, const Vector& u) { return rk4_step(rhs, x, u, dt); };
    return sys;
}

SnapshotSet run_experiments(const ControlSystem& sys, const ExperimentPlan& plan) {
    if (plan.num_experiments < 1 || plan.steps_per_experiment < 1)
        throw ConfigError("run_experiments: experiment and step counts must be >= 1");
    if (plan.input_mode == InputMode::PiecewiseConstant && plan.hold_steps < 1)
        throw ConfigError("run_experiments: hold_steps must be >= 1");
    if (static_cast<int>(sys.state_box.size()) != sys.state_dim ||
        static_cast<int>(sys.input_box.size()) != sys.input_dim)
        throw ConfigError("run_experiments: system " + sys.name + " lacks sampling boxes");

    UniformSampler rng(plan.seed);
    const int n = sys.state_dim;
    const int m = sys.input_dim;
    const int L = plan.steps_per_experiment;

    std::vector<Vector> xs, us, xps;
    xs.reserve(static_cast<std::size_t>(plan.num_experiments) * L);
    std::size_t rejected = 0;

    for (int e = 0; e < plan.num_experiments; ++e) {
        // Draws happen before simulation so a rejected experiment does not
        // shift the random stream of the ones after it.
        const Vector x0 = rng.sample(sys.state_box);
        std::vector<Vector> inputs;
        inputs.reserve(L);
        Vector held = rng.sample(sys.input_box);
        for (int k = 0; k < L; ++k) {
            if (plan.input_mode == InputMode::PiecewiseConstant && k > 0 && k % plan.hold_steps == 0)
                held = rng.sample(sys.input_box);
            inputs.push_back(held);
        }
        Trajectory traj;
        try {
            traj = simulate(sys, x0, inputs);
        } catch (const NonFiniteState&) {
            ++rejected;
            continue;
        }
        for (int k = 0; k < L; ++k) {
            xs.push_back(traj.states[k]);
            us.push_back(traj.inputs[k]);
            xps.push_back(traj.states[k + 1]);
        }
    }

    SnapshotSet ss;
    const auto N = static_cast<Eigen::Index>(xs.size());
    ss.X.resize(n, N);
    ss.Xplus.resize(n, N);
    ss.U.resize(m, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        ss.X.col(i) = xs[i];
        ss.Xplus.col(i) = xps[i];
        ss.U.col(i) = us[i];
    }
    ss.Uplus = ss.U;
    ss.system_name = sys.name;
    ss.seed = plan.seed;
    ss.dt = sys.dt;
    ss.rejected_experiments = rejected;
    return ss;
}

AugmentedSnapshots to_augmented(const SnapshotSet& ss) {
    ss.validate();
    AugmentedSnapshots aug;
    aug.state_dim = ss.state_dim();
    aug.input_dim = ss.input_dim();
    aug.Z.resize(ss.X.rows() + ss.U.rows(), ss.size());
    aug.Zplus.resize(aug.Z.rows(), ss.size());
    aug.Z << ss.X, ss.U;
    aug.Zplus << ss.Xplus, ss.Uplus;
    return aug;
}

namespace systems {

ControlSystem example_poly(const PolyParams& p) {
    ControlSystem sys;
    sys.name = "example_poly";
    sys.state_dim = 2;
    sys.input_dim = 1;
    sys.state_box = {{-2.0, 2.0}, {-2.0, 2.0}};
    sys.input_box = {{-2.0, 2.0}};
    sys.step_map = [p](const Vector& x, const Vector& u) {
        Vector next(2);
        const double v = u(0);
        next(0) = p.a * x(0) + p.b * v;
        next(1) = p.c * x(1) + p.d * x(0) * x(0) + p.e * x(0) * v + p.f * v + p.g * std::sin(v) + p.h;
        return next;
    };
    return sys;
}

double motor_input_map(MotorInput kind, double u) {
    switch (kind) {
        case MotorInput::Tanh:
            return 2.0 * std::tanh(u);
        case MotorInput::TanhCos:
            return 2.0 * std::tanh(u * std::cos(u));
    }
    return 0.0;
}

OdeRhs dc_motor_rhs(MotorInput kind, const MotorParams& p) {
    return [kind, p](const Vector& x, const Vector& u) {
        const double f = motor_input_map(kind, u(0));
        Vector dx(2);
        dx(0) = -(p.Ra / p.La) * x(0) - (p.km / p.La) * x(1) * f + p.ua / p.La;
        dx(1) = -(p.B / p.J) * x(1) + (p.km / p.J) * x(0) * f - p.tau_l / p.J;
        return dx;
    };
}

ControlSystem dc_motor(MotorInput kind, const MotorParams& p, double dt) {
    ControlSystem sys = discretize_rk4(dc_motor_rhs(kind, p), dt, 2, 1);
    sys.name = kind == MotorInput::Tanh ? "dc_motor_tanh" : "dc_motor_tanhcos";
    sys.state_box = {{-5.0, 15.0}, {-250.0, 125.0}};
    sys.input_box = {{-4.0, 4.0}};
    return sys;
}

std::vector<std::string> builtin_names() { return {"example_poly", "dc_motor_tanh", "dc_motor_tanhcos"}; }

ControlSystem by_name(const std::string& name) {
    if (name == "example_poly") return example_poly();
    if (name == "dc_motor_tanh") return dc_motor(MotorInput::Tanh);
    if (name == "dc_motor_tanhcos") return dc_motor(MotorInput::TanhCos);
    std::string msg = "unknown system '" + name + "'; builtin systems:";
    for (const auto& b : builtin_names()) msg += " " + b;
    throw ConfigError(msg);
}

}  // namespace systems

namespace io {

void write_snapshots_csv(const SnapshotSet& ss, const std::string& path, const std::string& comment) {
    ss.validate();
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    if (!comment.empty()) out << "# " << comment << '\n';
    const int n = ss.state_dim();
    const int m = ss.input_dim();
    std::string header;
    for (int i = 1; i <= n; ++i) header += "x" + std::to_string(i) + ",";
    for (int i = 1; i <= m; ++i) header += "u" + std::to_string(i) + ",";
    for (int i = 1; i <= n; ++i) header += "x" + std::to_string(i) + "p" + (i < n ? "," : "");
    out << header << '\n';
    char buf[32];
    for (Eigen::Index c = 0; c < ss.size(); ++c) {
        std::string line;
        auto put = [&](double v, bool last) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            line += buf;
            if (!last) line += ',';
        };
        for (int i = 0; i < n; ++i) put(ss.X(i, c), false);
        for (int i = 0; i < m; ++i) put(ss.U(i, c), false);
        for (int i = 0; i < n; ++i) put(ss.Xplus(i, c), i + 1 == n);
        out << line << '\n';
    }
}

SnapshotSet read_snapshots_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '#') continue;
        have_header = true;
        break;
    }
    if (!have_header) throw ParseError(path + ": line " + std::to_string(lineno + 1) + ": missing header");
    const std::string where = path + ": line " + std::to_string(lineno) + ": ";
    int n = 0, m = 0, np = 0;
    {
        std::stringstream hs(line);
        std::string tok;
        while (std::getline(hs, tok, ',')) {
            if (!tok.empty() && tok.back() == '\r') tok.pop_back();
            if (tok.size() > 1 && tok[0] == 'x' && tok.back() == 'p') ++np;
            else if (!tok.empty() && tok[0] == 'x') ++n;
            else if (!tok.empty() && tok[0] == 'u') ++m;
            else throw ParseError(where + "unexpected column '" + tok + "'");
        }
    }
    if (n == 0 || n != np) throw ParseError(where + "header must be x1..xn,u1..um,x1p..xnp");
    const int width = 2 * n + m;
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ls(line);
        std::string tok;
        int count = 0;
        while (std::getline(ls, tok, ',')) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (tok.empty() || end != tok.c_str() + tok.size())
                throw ParseError(path + ": line " + std::to_string(lineno) + ": bad number '" + tok + "'");
            values.push_back(v);
            ++count;
        }
        if (count != width)
            throw ParseError(path + ": line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                             " fields, got " + std::to_string(count));
        ++rows;
    }
    SnapshotSet ss;
    const auto N = static_cast<Eigen::Index>(rows);
    ss.X.resize(n, N);
    ss.U.resize(m, N);
    ss.Xplus.resize(n, N);
    for (Eigen::Index r = 0; r < N; ++r) {
        const double* row = values.data() + r * width;
        for (int i = 0; i < n; ++i) ss.X(i, r) = row[i];
        for (int i = 0; i < m; ++i) ss.U(i, r) = row[n + i];
        for (int i = 0; i < n; ++i) ss.Xplus(i, r) = row[n + m + i];
    }
    ss.Uplus = ss.U;
    return ss;
}

}  // namespace io

}  // namespace kcf
