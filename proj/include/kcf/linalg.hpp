#pragma once

#include <Eigen/Dense>

namespace kcf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Relative cutoff below which singular values are treated as zero.
inline constexpr double kPinvCutoff = 1e-10;

struct Svd {
    Matrix U;       // left singular vectors, rank columns kept
    Vector sigma;   // nonzero singular values, descending
    Matrix V;       // right singular vectors, rank columns kept
    double sigma_max = 0.0;
    double sigma_min_full = 0.0;  // smallest of the min(rows, cols) values, before truncation
    Eigen::Index rank() const { return sigma.size(); }
};

/// Thin SVD truncated at `cutoff * sigma_max`.
Svd truncated_svd(const Matrix& a, double cutoff = kPinvCutoff);

/// Moore-Penrose pseudo-inverse with relative singular-value cutoff.
Matrix pinv(const Matrix& a, double cutoff = kPinvCutoff);

/// Numerical rank with relative cutoff.
Eigen::Index rank(const Matrix& a, double cutoff);

/// All singular values, descending.
Vector singular_values(const Matrix& a);

/// 2-norm condition number; infinity for singular input.
double condition_number(const Matrix& a);

}  // namespace linalg
}  // namespace kcf
