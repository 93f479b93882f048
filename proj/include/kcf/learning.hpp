#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcf/dynamics.hpp"
#include "kcf/edmd.hpp"
#include "kcf/families.hpp"
#include "kcf/separable.hpp"

namespace kcf {

enum class LossMode { Trace, MaxEig };

std::string to_string(LossMode mode);
LossMode parse_loss_mode(const std::string& s);

struct TrainConfig {
    FamilySpec family = FamilySpec::residual_mlp(2, 32);
    int s = 20;
    int l = 4;
    std::vector<int> fixed_head = {0, 1};
    int epochs = 150;
    int batch_size = 200;
    double lr_start = 5e-4;
    double lr_end = 1e-6;
    std::uint64_t seed = 0;
    LossMode loss_mode = LossMode::Trace;
    std::vector<double> x_scale;  // empty: ones
    std::vector<double> u_scale;
    double train_fraction = 0.5;
    double ridge = 1e-10;  // relative ridge in the differentiable surrogate

    void validate(Eigen::Index num_snapshots) const;
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;       // same surrogate on the held-out split
    double val_proximity = 0.0;  // sqrt of the max-eig index on the held-out split, pinv definition
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double final_train_proximity = 0.0;
    double final_test_proximity = 0.0;
    double wall_seconds = 0.0;
    std::size_t nonfinite_batches = 0;
    std::size_t rejected_experiments = 0;
    bool aborted = false;
    std::string abort_reason;
};

/// Differentiable surrogate of the consistency index on one batch.
/// Trace: Tr(I - K_F K_B); MaxEig: lambda_max(I - K_F K_B). Pseudo-inverses are
/// replaced by (Phi Phi^T + eps I)^{-1} with eps = ridge * Tr(Phi Phi^T) / s.
double surrogate_loss(const Matrix& Phi, const Matrix& PhiPlus, LossMode mode, double ridge = 1e-10);

struct LossGradient {
    double value = 0.0;
    Matrix dPhi;
    Matrix dPhiPlus;
};

/// Trace-mode surrogate and its exact gradient with respect to both data matrices.
LossGradient surrogate_trace_gradient(const Matrix& Phi, const Matrix& PhiPlus, double ridge = 1e-10);

double loss(const ParametricDictionary& dict, const AugmentedSnapshots& batch, LossMode mode, double ridge = 1e-10);

/// Gradient of the trace-mode loss w.r.t. every trainable parameter.
Vector loss_gradient(const ParametricDictionary& dict, const AugmentedSnapshots& batch, double ridge = 1e-10);

/// Deterministic 50/50 style split by a seeded permutation.
std::pair<AugmentedSnapshots, AugmentedSnapshots> split_train_test(const AugmentedSnapshots& data, double train_fraction,
                                                                   std::uint64_t seed);

struct TrainResult {
    ParametricDictionary dictionary;
    TrainReport report;
};

ParametricDictionary make_dictionary(const TrainConfig& config, int state_dim, int input_dim);

/// Learns a normal-form dictionary by minimizing the surrogate with Adam.
TrainResult train(const TrainConfig& config, const AugmentedSnapshots& train_data,
                  const AugmentedSnapshots& test_data);

enum class BaselineKind { Linear, Bilinear };

/// Residual loss ||Psi(X+) - theta* R||^2 / B with theta* the ridge least-squares
/// optimum over the regressor R = [Psi(X); U] or [Psi(X); Psi(X) .* u_i].
double baseline_loss(const ParametricDictionary& psi, const AugmentedSnapshots& batch, BaselineKind kind,
                     Vector* gradient = nullptr, double ridge = 1e-10);

/// Trains Psi (s = l, same family and initial H weights as the separable model).
TrainResult train_baseline(const TrainConfig& config, BaselineKind kind, const AugmentedSnapshots& train_data,
                           const AugmentedSnapshots& test_data);

struct PipelineResult {
    SeparableModel separable;
    LinearLiftedModel linear;
    BilinearLiftedModel bilinear;
    TrainReport report;
    TrainReport linear_report;
    TrainReport bilinear_report;
    ParametricDictionary dictionary;
    ParametricDictionary linear_dictionary;
    ParametricDictionary bilinear_dictionary;
    ConsistencyReport train_consistency;
    ConsistencyReport test_consistency;
};

SnapshotSet to_snapshots(const AugmentedSnapshots& aug);

/// Train dictionary, fit A~ on the training split, extract the separable model,
/// and train linear/bilinear baselines of matching lifted dimension l.
PipelineResult pipeline(const TrainConfig& config, const AugmentedSnapshots& data);

/// Same flow with a fixed (untrained) normal dictionary; baselines use its H.
struct FixedPipelineResult {
    SeparableModel separable;
    LinearLiftedModel linear;
    BilinearLiftedModel bilinear;
    ConsistencyReport train_consistency;
};

FixedPipelineResult pipeline_fixed(const NormalDictionary& nd, const AugmentedSnapshots& train_data);

/// Piecewise-constant test signal, hold = 1 step, uniform over the input box.
std::vector<Vector> comparison_inputs(const ControlSystem& sys, int steps, std::uint64_t seed);

struct ComparisonRow {
    std::string model;
    std::vector<double> rmse;  // per state coordinate
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    std::vector<Vector> x0s;
    std::vector<Vector> inputs;
    std::vector<Matrix> truth;                     // per initial condition
    std::vector<std::vector<Matrix>> predictions;  // [model][initial condition]
};

/// Open-loop rollouts of every model from each x0; RMSE pools all initial conditions.
Comparison compare_models(const ControlSystem& sys, const std::vector<std::pair<std::string, AnyModel>>& models,
                          const std::vector<Vector>& x0s, const std::vector<Vector>& inputs);

}  // namespace kcf
