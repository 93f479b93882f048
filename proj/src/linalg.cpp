#include "kcf/linalg.hpp"

#include <limits>

namespace kcf::linalg {

Svd truncated_svd(const Matrix& a, double cutoff) {
    Svd out;
    if (a.size() == 0) {
        out.U = Matrix(a.rows(), 0);
        out.V = Matrix(a.cols(), 0);
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    out.sigma_max = s(0);
    out.sigma_min_full = s(s.size() - 1);
    Eigen::Index r = 0;
    const double threshold = cutoff * out.sigma_max;
    while (r < s.size() && s(r) > threshold && s(r) > 0.0) ++r;
    out.sigma = s.head(r);
    out.U = svd.matrixU().leftCols(r);
    out.V = svd.matrixV().leftCols(r);
    return out;
}

Matrix pinv(const Matrix& a, double cutoff) {
    const Svd svd = truncated_svd(a, cutoff);
    return svd.V * svd.sigma.cwiseInverse().asDiagonal() * svd.U.transpose();
}

Eigen::Index rank(const Matrix& a, double cutoff) {
    return truncated_svd(a, cutoff).rank();
}

Vector singular_values(const Matrix& a) {
    if (a.size() == 0) return Vector(0);
    Eigen::BDCSVD<Matrix> svd(a);
    return svd.singularValues();
}

double condition_number(const Matrix& a) {
    const Vector s = singular_values(a);
    if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

}  // namespace kcf::linalg
