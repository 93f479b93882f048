#pragma once

#include "kcf/dynamics.hpp"
#include "kcf/linalg.hpp"
#include "kcf/observables.hpp"

namespace kcf {

struct RankReport {
    bool row_rank_ok_X = false;
    bool row_rank_ok_Xplus = false;
    // smallest singular value of each data matrix relative to its largest
    double min_singular_X = 0.0;
    double min_singular_Xplus = 0.0;

    bool full_rank() const { return row_rank_ok_X && row_rank_ok_Xplus; }
};

/// K = Psi(X+) Psi(X)^dagger, the least-squares minimizer of ||Psi(X+) - K Psi(X)||_F.
struct EdmdFit {
    Matrix K;
    RankReport rank_report;
};

struct ConsistencyReport {
    double index = 0.0;       // lambda_max(I - K_F K_B), clamped to [0, 1]
    double sqrt_index = 0.0;
    double trace_lower = 0.0; // Tr(M_C) / s
    double trace_upper = 0.0; // Tr(M_C)
    Vector worst_coeffs;      // f = w^T Psi attaining the worst relative error, unit norm
    Matrix K_F;
    Matrix K_B;
    RankReport rank_report;

    Vector eigenvalues;       // spectrum of M_C after clamping, descending
    double pre_clamp_max = 0.0;
    double pre_clamp_min = 0.0;
    double asymmetry = 0.0;   // ||M_C - M_C^T||_max of the unsymmetrized matrix

    bool advisory() const { return !rank_report.full_rank(); }
};

struct EdmdOptions {
    double pinv_cutoff = linalg::kPinvCutoff;
};

/// Throws DegenerateData when Psi_X is identically zero.
EdmdFit fit_edmd(const Matrix& Psi_X, const Matrix& Psi_Xplus, const EdmdOptions& opts = {});

ConsistencyReport consistency_index(const Matrix& Psi_X, const Matrix& Psi_Xplus, const EdmdOptions& opts = {});

/// Consistency report of Phi on (Z, Z+); its sqrt_index is the invariance proximity.
ConsistencyReport invariance_proximity(const NormalDictionary& nd, const AugmentedSnapshots& aug,
                                       const EdmdOptions& opts = {});

/// w^T K Psi_x.
double predict_function(const EdmdFit& fit, const Vector& w, const Vector& Psi_x);

struct ProjectionResidual {
    Matrix residual;        // Psi(X+) - K Psi(X)
    Vector column_norms;
    double frobenius = 0.0;
};

ProjectionResidual projection_residual(const EdmdFit& fit, const Matrix& Psi_X, const Matrix& Psi_Xplus);

/// Relative L2(mu_X) error of the EDMD predictor for f = w^T Psi:
/// ||w^T (Psi(X+) - K Psi(X))|| / ||w^T Psi(X+)||. NaN when the denominator is 0.
double relative_prediction_error(const Matrix& K, const Matrix& Psi_X, const Matrix& Psi_Xplus, const Vector& w);

}  // namespace kcf
