#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "mfdlq/mfdlq.hpp"

namespace mfdlq::testing {

inline std::string data_path(const std::string& name) {
    return std::string(MFDLQ_TEST_DATA_DIR) + "/" + name;
}

inline ProblemSpec load_fixture(const std::string& name) {
    return load_problem_file(data_path(name));
}

/// Ternary search for the minimizer of a strictly convex scalar function.
inline double argmin_1d(const std::function<double(double)>& f, double lo = -10.0,
                        double hi = 10.0) {
    for (int it = 0; it < 400; ++it) {
        const double a = lo + (hi - lo) / 3.0;
        const double b = hi - (hi - lo) / 3.0;
        if (f(a) < f(b))
            hi = b;
        else
            lo = a;
    }
    return 0.5 * (lo + hi);
}

/// Sizes cycling through n <= max_n, r <= max_r, N <= max_N, keyed on the seed.
struct Sizes {
    std::size_t n, r, N;
};

inline Sizes sizes_for(std::uint64_t seed, std::size_t max_n, std::size_t max_r,
                       std::size_t max_N) {
    return {1 + seed % max_n, 1 + (seed / max_n) % max_r, 1 + (seed / (max_n * max_r)) % max_N};
}

/// |a - b| <= tol * max(|a|, |b|), entrywise.
inline bool rel_close(const Matrix& a, const Matrix& b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double scale = std::max(std::abs(a(i, j)), std::abs(b(i, j)));
            if (std::abs(a(i, j) - b(i, j)) > tol * scale) return false;
        }
    return true;
}

}  // namespace mfdlq::testing
