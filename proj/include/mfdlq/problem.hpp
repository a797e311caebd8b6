#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mfdlq/error.hpp"
#include "mfdlq/linalg.hpp"

namespace mfdlq {

enum class NoiseKind { Gaussian, Rademacher };

/// Scalar martingale-difference noise: zero mean, second moment `variance`.
struct NoiseModel {
    NoiseKind kind = NoiseKind::Rademacher;
    double variance = 1.0;

    [[nodiscard]] double sigma() const { return std::sqrt(variance); }
};

/// Coefficients of one stage k of
///   x_{k+1} = A x + Abar E x + B u + (C x + Cbar E x + D u) w_{k+1}
/// and the stage cost x'Qx + (Ex)'Qbar(Ex) + u'Ru + (Eu)'Rbar(Eu).
struct StageData {
    Matrix A, Abar, C, Cbar;  // n x n
    Matrix B, D;              // n x r
    Matrix Q, Qbar;           // n x n symmetric
    Matrix R, Rbar;           // r x r symmetric

    static StageData zero(std::size_t n, std::size_t r) {
        const auto ni = static_cast<Eigen::Index>(n);
        const auto ri = static_cast<Eigen::Index>(r);
        StageData s;
        s.A = s.Abar = s.C = s.Cbar = s.Q = s.Qbar = Matrix::Zero(ni, ni);
        s.B = s.D = Matrix::Zero(ni, ri);
        s.R = s.Rbar = Matrix::Zero(ri, ri);
        return s;
    }

    [[nodiscard]] bool barred_free() const {
        return linalg::is_zero(Abar) && linalg::is_zero(Cbar) && linalg::is_zero(Qbar) &&
               linalg::is_zero(Rbar);
    }

    bool operator==(const StageData& o) const {
        using linalg::same;
        return same(A, o.A) && same(Abar, o.Abar) && same(C, o.C) && same(Cbar, o.Cbar) &&
               same(B, o.B) && same(D, o.D) && same(Q, o.Q) && same(Qbar, o.Qbar) &&
               same(R, o.R) && same(Rbar, o.Rbar);
    }
};

struct ProblemSpec {
    std::size_t n = 0;  // state dimension
    std::size_t r = 0;  // control dimension
    std::size_t N = 0;  // horizon
    std::vector<StageData> stages;
    Matrix terminalQ, terminalQbar;
    Vector x0;
    NoiseModel noise;

    [[nodiscard]] bool barred_free() const {
        if (!linalg::is_zero(terminalQbar)) return false;
        for (const auto& s : stages)
            if (!s.barred_free()) return false;
        return true;
    }

    bool operator==(const ProblemSpec& o) const {
        using linalg::same;
        return n == o.n && r == o.r && N == o.N && stages == o.stages &&
               same(terminalQ, o.terminalQ) && same(terminalQbar, o.terminalQbar) &&
               same(x0, o.x0) && noise.kind == o.noise.kind && noise.variance == o.noise.variance;
    }
};

struct Violation {
    std::string location;     // e.g. "R_0", "terminal.Q"
    std::string description;
    double value = 0.0;       // offending eigenvalue, asymmetry, or dimension
};

struct ValidationReport {
    std::vector<Violation> violations;
    [[nodiscard]] bool ok() const { return violations.empty(); }
};

inline constexpr double kPsdTolerance = -1e-10;
inline constexpr double kPdTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-12;

namespace detail {

inline void check_shape(ValidationReport& rep, const std::string& loc, const Matrix& m,
                        std::size_t rows, std::size_t cols) {
    if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
        rep.violations.push_back({loc, "expected shape " + std::to_string(rows) + "x" +
                                           std::to_string(cols) + ", got " +
                                           std::to_string(m.rows()) + "x" +
                                           std::to_string(m.cols()),
                                  static_cast<double>(m.rows() * m.cols())});
    } else if (!m.allFinite()) {
        rep.violations.push_back({loc, "non-finite entry", 0.0});
    }
}

inline void check_symmetric(ValidationReport& rep, const std::string& loc, const Matrix& m) {
    if (m.rows() != m.cols() || !m.allFinite()) return;
    const double asym = linalg::max_abs(m - m.transpose());
    if (asym > kSymmetryTolerance) rep.violations.push_back({loc, "not symmetric", asym});
}

inline void check_psd(ValidationReport& rep, const std::string& loc, const Matrix& m) {
    if (m.rows() != m.cols() || !m.allFinite()) return;
    const double ev = linalg::min_eigenvalue(m);
    if (ev < kPsdTolerance)
        rep.violations.push_back({loc, loc + " not positive semidefinite", ev});
}

inline void check_pd(ValidationReport& rep, const std::string& loc, const Matrix& m) {
    if (m.rows() != m.cols() || !m.allFinite()) return;
    const double ev = linalg::min_eigenvalue(m);
    if (ev < kPdTolerance) rep.violations.push_back({loc, loc + " not positive definite", ev});
}

}  // namespace detail

/// Checks shapes, symmetry, and the weight conditions
/// Q, Q+Qbar >= 0 and R, R+Rbar > 0 for every stage and the terminal weights.
/// Violations are collected, never thrown.
inline ValidationReport validate(const ProblemSpec& spec) {
    using detail::check_pd;
    using detail::check_psd;
    using detail::check_shape;
    using detail::check_symmetric;

    ValidationReport rep;
    const std::size_t n = spec.n, r = spec.r;
    if (n == 0) rep.violations.push_back({"n", "state dimension must be >= 1", 0.0});
    if (r == 0) rep.violations.push_back({"r", "control dimension must be >= 1", 0.0});
    if (spec.N == 0) rep.violations.push_back({"N", "horizon must be >= 1", 0.0});
    if (spec.stages.size() != spec.N)
        rep.violations.push_back({"stages", "expected " + std::to_string(spec.N) + " stages",
                                  static_cast<double>(spec.stages.size())});
    if (static_cast<std::size_t>(spec.x0.size()) != n)
        rep.violations.push_back({"x0", "expected length " + std::to_string(n),
                                  static_cast<double>(spec.x0.size())});
    if (!(spec.noise.variance > 0.0) || !std::isfinite(spec.noise.variance))
        rep.violations.push_back({"noise.variance", "variance must be positive", spec.noise.variance});

    for (std::size_t k = 0; k < spec.stages.size(); ++k) {
        const auto& s = spec.stages[k];
        const std::string sub = "_" + std::to_string(k);
        check_shape(rep, "A" + sub, s.A, n, n);
        check_shape(rep, "Abar" + sub, s.Abar, n, n);
        check_shape(rep, "B" + sub, s.B, n, r);
        check_shape(rep, "C" + sub, s.C, n, n);
        check_shape(rep, "Cbar" + sub, s.Cbar, n, n);
        check_shape(rep, "D" + sub, s.D, n, r);
        check_shape(rep, "Q" + sub, s.Q, n, n);
        check_shape(rep, "Qbar" + sub, s.Qbar, n, n);
        check_shape(rep, "R" + sub, s.R, r, r);
        check_shape(rep, "Rbar" + sub, s.Rbar, r, r);
        check_symmetric(rep, "Q" + sub, s.Q);
        check_symmetric(rep, "Qbar" + sub, s.Qbar);
        check_symmetric(rep, "R" + sub, s.R);
        check_symmetric(rep, "Rbar" + sub, s.Rbar);
        check_psd(rep, "Q" + sub, s.Q);
        if (s.Q.rows() == s.Qbar.rows() && s.Q.cols() == s.Qbar.cols())
            check_psd(rep, "Q" + sub + "+Qbar" + sub, s.Q + s.Qbar);
        check_pd(rep, "R" + sub, s.R);
        if (s.R.rows() == s.Rbar.rows() && s.R.cols() == s.Rbar.cols())
            check_pd(rep, "R" + sub + "+Rbar" + sub, s.R + s.Rbar);
    }

    check_shape(rep, "terminal.Q", spec.terminalQ, n, n);
    check_shape(rep, "terminal.Qbar", spec.terminalQbar, n, n);
    check_symmetric(rep, "terminal.Q", spec.terminalQ);
    check_symmetric(rep, "terminal.Qbar", spec.terminalQbar);
    check_psd(rep, "Q_N", spec.terminalQ);
    if (spec.terminalQ.rows() == spec.terminalQbar.rows() &&
        spec.terminalQ.cols() == spec.terminalQbar.cols())
        check_psd(rep, "Q_N+Qbar_N", spec.terminalQ + spec.terminalQbar);
    return rep;
}

namespace detail {

inline Matrix uniform_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    return m;
}

inline Matrix gram(std::mt19937_64& rng, std::size_t dim) {
    const Matrix m = uniform_matrix(rng, dim, dim);
    return linalg::symmetrize(m.transpose() * m);
}

}  // namespace detail

/// Random instance satisfying the weight conditions by construction:
/// Q = M'M, Q+Qbar = M2'M2, R = L'L + 0.1 I, R+Rbar = L2'L2 + 0.1 I.
/// All coefficient (and x0) entries are uniform in [-1, 1]. Barred matrices are
/// zero when `meanfield` is false. Deterministic in `seed`.
inline ProblemSpec generate_random(std::size_t n, std::size_t r, std::size_t N, std::uint64_t seed,
                                   bool meanfield, NoiseModel noise = {}) {
    using detail::gram;
    using detail::uniform_matrix;
    if (n == 0 || r == 0 || N == 0)
        throw DimensionError("generate_random requires n, r, N >= 1");

    std::mt19937_64 rng(seed);
    const auto ri = static_cast<Eigen::Index>(r);
    ProblemSpec spec;
    spec.n = n;
    spec.r = r;
    spec.N = N;
    spec.noise = noise;
    spec.stages.reserve(N);
    for (std::size_t k = 0; k < N; ++k) {
        StageData s = StageData::zero(n, r);
        s.A = uniform_matrix(rng, n, n);
        s.B = uniform_matrix(rng, n, r);
        s.C = uniform_matrix(rng, n, n);
        s.D = uniform_matrix(rng, n, r);
        s.Q = gram(rng, n);
        s.R = linalg::symmetrize(gram(rng, r) + 0.1 * Matrix::Identity(ri, ri));
        if (meanfield) {
            s.Abar = uniform_matrix(rng, n, n);
            s.Cbar = uniform_matrix(rng, n, n);
            s.Qbar = linalg::symmetrize(gram(rng, n) - s.Q);
            s.Rbar = linalg::symmetrize(gram(rng, r) + 0.1 * Matrix::Identity(ri, ri) - s.R);
        }
        spec.stages.push_back(std::move(s));
    }
    spec.terminalQ = gram(rng, n);
    spec.terminalQbar = meanfield ? linalg::symmetrize(gram(rng, n) - spec.terminalQ)
                                  : Matrix::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n));
    spec.x0 = uniform_matrix(rng, n, 1).col(0);
    return spec;
}

/// Returns a copy with every weight (Q, Qbar, R, Rbar, terminal) multiplied by `lambda`.
inline ProblemSpec scale_weights(ProblemSpec spec, double lambda) {
    for (auto& s : spec.stages) {
        s.Q *= lambda;
        s.Qbar *= lambda;
        s.R *= lambda;
        s.Rbar *= lambda;
    }
    spec.terminalQ *= lambda;
    spec.terminalQbar *= lambda;
    return spec;
}

}  // namespace mfdlq
