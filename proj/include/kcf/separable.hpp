#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kcf/dynamics.hpp"
#include "kcf/edmd.hpp"
#include "kcf/observables.hpp"

namespace kcf {

/// Linear read-out x = D H(x). Built from a fixed head (selection rows) or
/// fitted by least squares when the state is not part of the dictionary.
struct StateDecoder {
    Matrix D;                   // n x l
    double training_residual = 0.0;
    bool from_fixed_head = false;

    Vector decode(const Vector& lifted) const { return D * lifted; }
};

/// Head coordinates: lifted index k carries x_{head[k]}.
StateDecoder decoder_from_head(int state_dim, int lifted_dim, const std::vector<int>& head);

/// Least squares D = X H(X)^dagger; reports the relative Frobenius residual.
StateDecoder fit_decoder(const StateDictionary& H, const Matrix& X);

/// Picks the fixed-head decoder when H's tags start with x1..xn, else fits one on X.
StateDecoder default_decoder(const StateDictionary& H, const Matrix& X);

/// H(x+) ~= A(u) H(x) with A(u) = A11 + A12 G~(u).
struct SeparableModel {
    StateDictionary H;
    Matrix A11;
    Matrix A12;  // l x (s - l), empty when s == l
    Matrix A21;
    Matrix A22;
    std::optional<InputMatrixFunction> Gtilde;
    double source_index = 0.0;  // invariance proximity of the fit the model came from
    StateDecoder decoder;
    std::string dictionary_descriptor;  // JSON text of the dictionary, for serialization

    int l() const { return static_cast<int>(A11.rows()); }
    int s() const { return l() + static_cast<int>(A12.cols()); }

    Matrix A_of(const Vector& u) const;
};

/// Block split of the fitted s x s matrix at row/column l.
SeparableModel extract_normal(const EdmdFit& fit, const NormalDictionary& nd, double source_index);

/// (G^T G)^{-1} G^T A G at u; throws RankDeficientAtInput when G(u) loses column rank.
Matrix extract_pseudoinverse(const Matrix& A, const InputMatrixMap& G, const Vector& u, double tol = 1e-8);

struct Rollout {
    std::vector<Vector> lifted;  // L + 1 entries, lifted[0] = H(x0)
    Matrix states;               // n x (L + 1), decoded
};

Rollout rollout(const SeparableModel& model, const Vector& x0, const std::vector<Vector>& inputs);

/// v_h^T A(u) H(x).
double predict_observable(const SeparableModel& model, const Vector& v_h, const Vector& x, const Vector& u);

/// psi(x+) = A psi(x) + B u
struct LinearLiftedModel {
    StateDictionary psi;
    Matrix A;
    Matrix B;
    StateDecoder decoder;
    bool advisory = false;  // regressor not full row rank
    double residual = 0.0;  // Frobenius residual on the fitting data
    std::string dictionary_descriptor;

    Vector step(const Vector& z, const Vector& u) const { return A * z + B * u; }
};

/// psi(x+) = A psi(x) + sum_i B_i psi(x) u_i (+ C u)
struct BilinearLiftedModel {
    StateDictionary psi;
    Matrix A;
    std::vector<Matrix> B;
    std::optional<Matrix> C;
    StateDecoder decoder;
    bool advisory = false;
    double residual = 0.0;
    std::string dictionary_descriptor;

    Vector step(const Vector& z, const Vector& u) const;

    /// [[A + sum u_i B_i, C u], [0, 1]] acting on [psi; 1].
    Matrix as_separable(const Vector& u) const;
};

LinearLiftedModel fit_linear_baseline(const StateDictionary& psi, const SnapshotSet& ss);

BilinearLiftedModel fit_bilinear_baseline(const StateDictionary& psi, const SnapshotSet& ss, bool with_affine = false);

/// Psi(x+) = A_u Psi(x) on a finite input set.
struct SwitchedLinearModel {
    StateDictionary psi;
    std::vector<Vector> inputs;
    std::vector<Matrix> matrices;

    /// Exact lookup; throws UnknownInputValue.
    const Matrix& A(const Vector& u) const;
};

/// One EDMD fit per subset; each subset must hold a single constant input.
SwitchedLinearModel switched_from_constant_inputs(const StateDictionary& psi, const std::vector<SnapshotSet>& subsets);

using AnyModel = std::variant<SeparableModel, LinearLiftedModel, BilinearLiftedModel>;

std::string model_kind(const AnyModel& model);

/// Open-loop decoded state trajectory, n x (L + 1).
Matrix rollout_states(const AnyModel& model, const Vector& x0, const std::vector<Vector>& inputs);

}  // namespace kcf
