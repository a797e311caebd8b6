#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mfdlq/error.hpp"
#include "mfdlq/json_writer.hpp"
#include "mfdlq/linalg.hpp"
#include "mfdlq/problem.hpp"
#include "mfdlq/problem_io.hpp"

namespace mfdlq {

/// Backward Riccati sequences for the split x = (x - Ex) + Ex.
///   P, Pi : N+1 symmetric n x n matrices, P[N] = Q_N, Pi[N] = Q_N + Qbar_N
///   K, Kbar : N gains r x n acting on the deviation and the mean respectively
struct RiccatiSolution {
    std::vector<Matrix> P, Pi;
    std::vector<Matrix> K, Kbar;

    [[nodiscard]] std::size_t horizon() const { return K.size(); }
    [[nodiscard]] const Matrix& value_matrix() const { return Pi.front(); }
};

namespace detail {

struct StepResult {
    Matrix value;  // P_k (or Pi_k)
    Matrix gain;   // K_k (or Kbar_k)
};

// One backward step of
//   M = R + B' Pb B + s2 D' Pd D,  L = B' Pb A + s2 D' Pd C,
//   gain = M^{-1} L,  value = Q + A' Pb A + s2 C' Pd C - L' gain.
// The deviation recursion uses Pb = Pd = P_{k+1}; the mean recursion uses
// Pb = Pi_{k+1}, Pd = P_{k+1} with A -> A+Abar, C -> C+Cbar, Q -> Q+Qbar, R -> R+Rbar.
inline StepResult riccati_step(const Matrix& Pb, const Matrix& Pd, const Matrix& Q,
                               const Matrix& R, const Matrix& A, const Matrix& B,
                               const Matrix& C, const Matrix& D, double s2,
                               const char* which, std::size_t k) {
    const Matrix PbB = Pb * B;
    const Matrix PdD = Pd * D;
    const Matrix M = linalg::symmetrize(R + B.transpose() * PbB + s2 * (D.transpose() * PdD));
    const Matrix L = PbB.transpose() * A + s2 * (PdD.transpose() * C);
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) throw SingularDenominator(which, k);
    StepResult out;
    out.gain = llt.solve(L);
    out.value = linalg::symmetrize(Q + A.transpose() * Pb * A + s2 * (C.transpose() * Pd * C) -
                                   L.transpose() * out.gain);
    return out;
}

inline void require_consistent(const ProblemSpec& spec) {
    if (spec.stages.size() != spec.N || spec.N == 0)
        throw DimensionError("problem has " + std::to_string(spec.stages.size()) +
                             " stages for horizon " + std::to_string(spec.N));
}

}  // namespace detail

/// Riccati recursion for problems without mean-field terms:
///   P_k = Q + A'PA + s2 C'PC - (A'PB + s2 C'PD)(R + B'PB + s2 D'PD)^{-1}(B'PA + s2 D'PC),
/// with s2 the noise variance. Pi = P and Kbar = K.
inline RiccatiSolution solve_classical(const ProblemSpec& spec) {
    detail::require_consistent(spec);
    if (!spec.barred_free())
        throw NonZeroMeanField("problem has nonzero mean-field matrices; use solve_meanfield");
    const std::size_t N = spec.N;
    const double s2 = spec.noise.variance;

    RiccatiSolution sol;
    sol.P.resize(N + 1);
    sol.K.resize(N);
    sol.P[N] = linalg::symmetrize(spec.terminalQ);
    for (std::size_t k = N; k-- > 0;) {
        const auto& s = spec.stages[k];
        auto step = detail::riccati_step(sol.P[k + 1], sol.P[k + 1], s.Q, s.R, s.A, s.B, s.C, s.D,
                                         s2, "deviation", k);
        sol.P[k] = std::move(step.value);
        sol.K[k] = std::move(step.gain);
    }
    sol.Pi = sol.P;
    sol.Kbar = sol.K;
    return sol;
}

/// Coupled deviation/mean recursions. The deviation part is the classical
/// recursion; the mean part sees A+Abar, C+Cbar, Q+Qbar, R+Rbar and weights the
/// drift by Pi_{k+1} but the diffusion by P_{k+1} (noise acts on the deviation).
inline RiccatiSolution solve_meanfield(const ProblemSpec& spec) {
    detail::require_consistent(spec);
    const std::size_t N = spec.N;
    const double s2 = spec.noise.variance;

    RiccatiSolution sol;
    sol.P.resize(N + 1);
    sol.Pi.resize(N + 1);
    sol.K.resize(N);
    sol.Kbar.resize(N);
    sol.P[N] = linalg::symmetrize(spec.terminalQ);
    sol.Pi[N] = linalg::symmetrize(spec.terminalQ + spec.terminalQbar);
    for (std::size_t k = N; k-- > 0;) {
        const auto& s = spec.stages[k];
        auto dev = detail::riccati_step(sol.P[k + 1], sol.P[k + 1], s.Q, s.R, s.A, s.B, s.C, s.D,
                                        s2, "deviation", k);
        const Matrix Ap = s.A + s.Abar;
        const Matrix Cp = s.C + s.Cbar;
        auto mean = detail::riccati_step(sol.Pi[k + 1], sol.P[k + 1], s.Q + s.Qbar, s.R + s.Rbar,
                                         Ap, s.B, Cp, s.D, s2, "mean", k);
        sol.P[k] = std::move(dev.value);
        sol.K[k] = std::move(dev.gain);
        sol.Pi[k] = std::move(mean.value);
        sol.Kbar[k] = std::move(mean.gain);
    }
    return sol;
}

/// u = -K_k (x - mean_x) - Kbar_k mean_x
inline Vector feedback(const RiccatiSolution& sol, std::size_t k, const Vector& x,
                       const Vector& mean_x) {
    if (k >= sol.horizon())
        throw StageOutOfRange("stage " + std::to_string(k) + " outside [0, " +
                              std::to_string(sol.horizon()) + ")");
    return -sol.K[k] * (x - mean_x) - sol.Kbar[k] * mean_x;
}

/// x0' Pi_0 x0. With a deterministic initial state the deviation part vanishes.
inline double optimal_value(const RiccatiSolution& sol, const Vector& x0) {
    return x0.dot(sol.value_matrix() * x0);
}

inline std::string serialize_solution(const RiccatiSolution& sol, const Vector& x0) {
    io::ordered_json doc;
    auto seq = [](const std::vector<Matrix>& ms) {
        io::ordered_json arr = io::ordered_json::array();
        for (const auto& m : ms) arr.push_back(io::to_json(m));
        return arr;
    };
    doc["P"] = seq(sol.P);
    doc["Pi"] = seq(sol.Pi);
    doc["K"] = seq(sol.K);
    doc["Kbar"] = seq(sol.Kbar);
    doc["optimal_value"] = optimal_value(sol, x0);
    return io::dump(doc);
}

/// Reads a document written by serialize_solution, checking it against `spec`'s shapes.
inline RiccatiSolution load_solution(std::string_view text, const ProblemSpec& spec) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed solution file: ") + e.what());
    }
    auto seq = [&](const char* key, std::size_t count, std::size_t rows, std::size_t cols) {
        if (!doc.contains(key)) throw MissingFieldError(key);
        const auto& arr = doc[key];
        if (!arr.is_array() || arr.size() != count)
            throw DimensionError(key, count, 1, arr.is_array() ? arr.size() : 0, 1);
        std::vector<Matrix> out;
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(io::matrix_from_json(arr[i], key, rows, cols));
        return out;
    };
    RiccatiSolution sol;
    sol.P = seq("P", spec.N + 1, spec.n, spec.n);
    sol.Pi = seq("Pi", spec.N + 1, spec.n, spec.n);
    sol.K = seq("K", spec.N, spec.r, spec.n);
    sol.Kbar = seq("Kbar", spec.N, spec.r, spec.n);
    return sol;
}

}  // namespace mfdlq
