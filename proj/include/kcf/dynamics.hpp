#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kcf/linalg.hpp"

namespace kcf {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

using Box = std::vector<Interval>;

using StepMap = std::function<Vector(const Vector& x, const Vector& u)>;
using OdeRhs = std::function<Vector(const Vector& x, const Vector& u)>;

/// Discrete-time control system x+ = T(x, u).
struct ControlSystem {
    std::string name;
    int state_dim = 0;
    int input_dim = 0;
    StepMap step_map;
    Box state_box;
    Box input_box;
    double dt = 0.0;  // sampling period for discretized ODEs, 0 for native maps
};

struct Trajectory {
    std::vector<Vector> states;  // L + 1 entries
    std::vector<Vector> inputs;  // L entries
    std::size_t out_of_box = 0;  // states that left state_box (kept, not clipped)
};

struct SnapshotSet {
    Matrix X;
    Matrix Xplus;
    Matrix U;
    Matrix Uplus;

    std::string system_name;
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::size_t rejected_experiments = 0;

    Eigen::Index size() const { return X.cols(); }
    int state_dim() const { return static_cast<int>(X.rows()); }
    int input_dim() const { return static_cast<int>(U.rows()); }

    /// Throws DimensionMismatch when the four matrices disagree or U+ != U.
    void validate() const;

    /// Columns `cols` as a new set (metadata copied).
    SnapshotSet select(const std::vector<Eigen::Index>& cols) const;
};

/// Z = [X; U], Z+ = [X+; U].
struct AugmentedSnapshots {
    Matrix Z;
    Matrix Zplus;
    int state_dim = 0;
    int input_dim = 0;

    Eigen::Index size() const { return Z.cols(); }
    auto states() const { return Z.topRows(state_dim); }
    auto next_states() const { return Zplus.topRows(state_dim); }
    auto inputs() const { return Z.bottomRows(input_dim); }

    AugmentedSnapshots select(const std::vector<Eigen::Index>& cols) const;
};

enum class InputMode { ConstantPerExperiment, PiecewiseConstant };

struct ExperimentPlan {
    int num_experiments = 1;
    int steps_per_experiment = 1;
    std::uint64_t seed = 0;
    InputMode input_mode = InputMode::ConstantPerExperiment;
    int hold_steps = 1;  // PiecewiseConstant only
};

/// x+ = T(x, u). Throws NonFiniteState (step index 0) naming the bad coordinate.
Vector step(const ControlSystem& sys, const Vector& x, const Vector& u);

/// (x+, u+) = (T(x, u), u).
std::pair<Vector, Vector> augmented_step(const ControlSystem& sys, const Vector& x, const Vector& u);

Trajectory simulate(const ControlSystem& sys, const Vector& x0, const std::vector<Vector>& inputs);

/// One classical RK4 step of `rhs` per sample, input held over [0, dt].
ControlSystem discretize_rk4(OdeRhs rhs, double dt, int state_dim, int input_dim);

/// Single RK4 step; exposed for oracle construction in tests.
Vector rk4_step(const OdeRhs& rhs, const Vector& x, const Vector& u, double dt);

SnapshotSet run_experiments(const ControlSystem& sys, const ExperimentPlan& plan);

AugmentedSnapshots to_augmented(const SnapshotSet& ss);

bool in_box(const Box& box, const Vector& v);

/// Uniform sampler on top of mt19937_64 (whose output sequence is fixed by the
/// standard); the real conversion is done here so results do not depend on the
/// standard library's distribution implementation.
class UniformSampler {
public:
    explicit UniformSampler(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo, double hi);
    Vector sample(const Box& box);
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

namespace systems {

struct PolyParams {
    double a = 0.5, b = 1.0, c = 0.8, d = 0.1, e = 0.2, f = 0.3, g = 0.4, h = 0.05;
};

/// x1+ = a x1 + b u;  x2+ = c x2 + d x1^2 + e x1 u + f u + g sin(u) + h
ControlSystem example_poly(const PolyParams& p = {});

enum class MotorInput { Tanh, TanhCos };

struct MotorParams {
    double Ra = 12.345, La = 0.314, km = 0.253, ua = 60.0, B = 0.00732, tau_l = 1.47, J = 0.00441;
};

double motor_input_map(MotorInput kind, double u);

OdeRhs dc_motor_rhs(MotorInput kind, const MotorParams& p = {});

/// DC motor sampled at 5 ms with RK4.
ControlSystem dc_motor(MotorInput kind, const MotorParams& p = {}, double dt = 0.005);

std::vector<std::string> builtin_names();

/// Throws ConfigError listing the builtin names.
ControlSystem by_name(const std::string& name);

}  // namespace systems

namespace io {

/// CSV header x1..xn,u1..um,x1p..xnp; values printed with %.17g. A non-empty
/// comment goes on a leading "# " line.
void write_snapshots_csv(const SnapshotSet& ss, const std::string& path, const std::string& comment = "");

/// Reads the CSV written above, skipping "#" lines; ParseError names the offending line.
SnapshotSet read_snapshots_csv(const std::string& path);

}  // namespace io

}  // namespace kcf
