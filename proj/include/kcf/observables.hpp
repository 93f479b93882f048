#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kcf/linalg.hpp"

namespace kcf {

/// H: R^n -> R^l.
struct StateDictionary {
    int state_dim = 0;
    int dim = 0;
    std::function<Vector(const Vector& x)> eval;
    std::vector<std::string> tags;
};

/// G~: R^m -> R^{rows x cols}.
struct InputMatrixFunction {
    int input_dim = 0;
    int rows = 0;
    int cols = 0;
    std::function<Matrix(const Vector& u)> eval;
};

/// Phi(x, u) = [H(x); G~(u) H(x)]. The top l x l block of G(u) is the identity,
/// which makes every dictionary of this type normal by construction.
struct NormalDictionary {
    StateDictionary H;
    std::optional<InputMatrixFunction> Gtilde;
    std::string name;

    int s() const { return H.dim + (Gtilde ? Gtilde->rows : 0); }
    int l() const { return H.dim; }
    int state_dim() const { return H.state_dim; }
    int input_dim() const { return Gtilde ? Gtilde->input_dim : input_dim_hint; }

    /// Needed only when Gtilde is absent (s == l).
    int input_dim_hint = 0;

    Vector eval(const Vector& x, const Vector& u) const;

    /// G(u) = [I; G~(u)], s x l.
    Matrix G(const Vector& u) const;

    /// Phi on the columns of an augmented data matrix [X; U].
    Matrix eval_matrix(const Matrix& Z) const;

    /// Throws ConfigError if the pieces have inconsistent shapes.
    void validate() const;
};

using InputMatrixMap = std::function<Matrix(const Vector& u)>;

/// Columns of the result are H(X[:, i]); shape l x N.
Matrix eval_matrix(const StateDictionary& H, const Matrix& X);

inline Matrix eval_matrix(const NormalDictionary& nd, const Matrix& Z) { return nd.eval_matrix(Z); }

/// Coefficients of the control-independent extension h_e(x, u) = h(x) 1(u) in
/// the basis Phi: [h; 0].
Vector control_independent_extension(const Vector& h_coeffs, const NormalDictionary& nd);

struct SeparableTerm {
    std::function<double(const Vector& u)> p;
    std::function<double(const Vector& x)> q;
    std::string p_tag;
    std::string q_tag;
};

/// phi_i(x, u) = sum_j p_j^i(u) q_j^i(x) for each basis function i.
struct SeparableTermList {
    int state_dim = 0;
    int input_dim = 0;
    std::vector<std::vector<SeparableTerm>> functions;

    std::size_t total_terms() const;
    Vector eval(const Vector& x, const Vector& u) const;
};

struct SeparableDecomposition {
    InputMatrixMap G;          // s x l'
    StateDictionary H;         // l' functions, a subset of the state factors
    std::vector<std::size_t> selected;  // flat term indices chosen as the basis of Q
    double probe_reconstruction_error = 0.0;
};

/// Builds Phi = G(u) H'(x) with H' a basis of span{q_j^i}; the basis is picked
/// greedily in term order by rank-revealing Gram-Schmidt on probe evaluations.
SeparableDecomposition decompose_separable(const SeparableTermList& terms, const Matrix& probe_states,
                                           double tol = 1e-8);

struct RankCheck {
    bool full_rank = true;
    std::vector<Vector> failing_inputs;
    std::vector<double> relative_sigma_min;  // one per sample
};

/// Per sample: sigma_min(G(u)) > tol * sigma_max(G(u)).
RankCheck check_rank_condition(const InputMatrixMap& G, const std::vector<Vector>& u_samples,
                               double tol = 1e-8);

struct NormalityCheck {
    bool normal = false;
    double residual = 0.0;               // RMS of W G(u_i) - I over samples
    std::optional<Matrix> transform;     // E = [W; B], s x s, when normal
};

/// Normality is judged on the sampled inputs only.
NormalityCheck verify_normality(const InputMatrixMap& G, const std::vector<Vector>& u_samples,
                                double tol = 1e-8);

namespace dictionaries {

/// Phi = [x1, x2, x1^2, 1, x1 u, u, u^2, sin u] in normal form (l = 4, s = 8).
/// `with_square` drops x1^2 from H (and the x1 u row then remains in G~);
/// `with_sin` drops the sin(u) row.
NormalDictionary example_poly(bool with_square = true, bool with_sin = true);

/// The same eight functions as an explicit list of separable product terms.
SeparableTermList example_poly_terms();

}  // namespace dictionaries

}  // namespace kcf
