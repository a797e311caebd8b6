#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfdlq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Smallest eigenvalue of the symmetric part of `m`; +inf for an empty matrix.
inline double min_eigenvalue(const Matrix& m) {
    if (m.size() == 0) return std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool is_zero(const Matrix& m) { return m.size() == 0 || (m.array() == 0.0).all(); }

/// Exact (bitwise-value) equality including shape.
template <typename A, typename B>
bool same(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

/// Pairwise (cascade) summation in index order; the result depends only on the input order.
template <typename It>
double pairwise_sum(It first, It last) {
    const auto count = std::distance(first, last);
    if (count <= 8) {
        double s = 0.0;
        for (; first != last; ++first) s += *first;
        return s;
    }
    It mid = first;
    std::advance(mid, count / 2);
    return pairwise_sum(first, mid) + pairwise_sum(mid, last);
}

}  // namespace linalg
}  // namespace mfdlq
