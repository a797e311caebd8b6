#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mfdlq/json_writer.hpp"
#include "mfdlq/problem.hpp"
#include "mfdlq/problem_io.hpp"
#include "mfdlq/tree_oracle.hpp"

namespace mfdlq {

// Adjoint p (the negative costate, terminal value -Q_N x_N - Qbar_N E x_N) and the
// stationarity condition
//   B' E{p_{k+1} | node} + D' E{p_{k+1} w_{k+1} | node} - R u - Rbar E u = 0
// evaluated exactly on the scenario tree.

struct AdjointCertificate {
    std::vector<std::vector<Vector>> adjoint;    // adjoint[k][i], k = 1..N (adjoint[0] empty)
    std::vector<std::vector<Vector>> residuals;  // residuals[k][i], k = 0..N-1
    std::vector<double> stage_max;               // max-norm of residuals per stage
    double max_residual = 0.0;
};

namespace detail {

struct ChildAverages {
    Vector p;   // E{p_{k+1} | node}
    Vector pw;  // E{p_{k+1} w_{k+1} | node}
};

inline ChildAverages child_averages(const ScenarioTree& tree, const std::vector<Vector>& next,
                                    std::size_t k, std::size_t i) {
    // Children of node i are 2i and 2i+1, each with conditional probability 1/2.
    const auto& lo = tree.nodes[k + 1][2 * i];
    const auto& hi = tree.nodes[k + 1][2 * i + 1];
    ChildAverages a;
    a.p = 0.5 * next[2 * i] + 0.5 * next[2 * i + 1];
    a.pw = (0.5 * lo.noise) * next[2 * i] + (0.5 * hi.noise) * next[2 * i + 1];
    return a;
}

}  // namespace detail

/// Backward adjoint recursion for k = N-1..1:
///   p_k = A' E{p_{k+1}|.} + Abar' E p_{k+1} + C' E{p_{k+1} w|.} + Cbar' E{p_{k+1} w}
///         - Q x_k - Qbar E x_k.
/// All expectations are exact finite sums in fixed node order.
inline std::vector<std::vector<Vector>> compute_adjoint(const ProblemSpec& spec,
                                                        const ScenarioTree& tree,
                                                        const TreeControl& controls) {
    const auto traj = tree_states<double>(spec, tree, controls);
    const auto n = static_cast<Eigen::Index>(spec.n);
    const std::size_t N = tree.depth;

    std::vector<std::vector<Vector>> p(N + 1);
    p[N].resize(tree.nodes[N].size());
    const Vector terminal_mf = spec.terminalQbar * traj.mean_state[N];
    for (std::size_t i = 0; i < p[N].size(); ++i)
        p[N][i] = -spec.terminalQ * traj.state[N][i] - terminal_mf;

    for (std::size_t k = N - 1; k >= 1; --k) {
        const auto& s = spec.stages[k];
        const auto& next = p[k + 1];
        Vector ep = Vector::Zero(n), epw = Vector::Zero(n);
        for (std::size_t j = 0; j < next.size(); ++j) {
            const auto& node = tree.nodes[k + 1][j];
            ep += node.probability * next[j];
            epw += (node.probability * node.noise) * next[j];
        }
        const Vector shared = s.Abar.transpose() * ep + s.Cbar.transpose() * epw -
                              s.Qbar * traj.mean_state[k];
        p[k].resize(tree.nodes[k].size());
        for (std::size_t i = 0; i < p[k].size(); ++i) {
            const auto avg = detail::child_averages(tree, next, k, i);
            p[k][i] = s.A.transpose() * avg.p + s.C.transpose() * avg.pw -
                      s.Q * traj.state[k][i] + shared;
        }
        if (k == 1) break;
    }
    return p;
}

inline AdjointCertificate stationarity_residual(const ProblemSpec& spec, const ScenarioTree& tree,
                                                const TreeControl& controls,
                                                std::vector<std::vector<Vector>> adjoint) {
    detail::check_controls(tree, controls);
    if (adjoint.size() != tree.depth + 1)
        throw DimensionError("adjoint does not match tree depth");
    const auto r = static_cast<Eigen::Index>(spec.r);

    AdjointCertificate cert;
    cert.residuals.resize(tree.depth);
    cert.stage_max.assign(tree.depth, 0.0);
    for (std::size_t k = 0; k < tree.depth; ++k) {
        const auto& s = spec.stages[k];
        const auto& nodes = tree.nodes[k];
        if (adjoint[k + 1].size() != tree.nodes[k + 1].size())
            throw DimensionError("adjoint stage " + std::to_string(k + 1) + " has wrong node count");
        Vector umean = Vector::Zero(r);
        for (std::size_t i = 0; i < nodes.size(); ++i)
            umean += nodes[i].probability * controls.u[k][i];
        const Vector mf = s.Rbar * umean;
        cert.residuals[k].resize(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto avg = detail::child_averages(tree, adjoint[k + 1], k, i);
            Vector res = s.B.transpose() * avg.p + s.D.transpose() * avg.pw - s.R * controls.u[k][i];
            res -= mf;
            cert.stage_max[k] = std::max(cert.stage_max[k], linalg::max_abs(res));
            cert.residuals[k][i] = std::move(res);
        }
        cert.max_residual = std::max(cert.max_residual, cert.stage_max[k]);
    }
    cert.adjoint = std::move(adjoint);
    return cert;
}

inline AdjointCertificate certify_controls(const ProblemSpec& spec, const ScenarioTree& tree,
                                           const TreeControl& controls) {
    return stationarity_residual(spec, tree, controls, compute_adjoint(spec, tree, controls));
}

/// `max_residual`, per-stage maxima, and with `verbose` every node's adjoint and residual.
inline std::string serialize_certificate(const AdjointCertificate& cert, bool verbose = false) {
    io::ordered_json doc;
    doc["max_residual"] = cert.max_residual;
    io::ordered_json stages = io::ordered_json::array();
    for (double v : cert.stage_max) stages.push_back(v);
    doc["stage_max_residual"] = std::move(stages);
    if (verbose) {
        io::ordered_json nodes = io::ordered_json::array();
        for (std::size_t k = 0; k < cert.residuals.size(); ++k)
            for (std::size_t i = 0; i < cert.residuals[k].size(); ++i) {
                io::ordered_json e;
                e["stage"] = k;
                e["node"] = i;
                e["residual"] = io::to_json(cert.residuals[k][i]);
                nodes.push_back(std::move(e));
            }
        doc["residuals"] = std::move(nodes);
        io::ordered_json adj = io::ordered_json::array();
        for (std::size_t k = 1; k < cert.adjoint.size(); ++k)
            for (std::size_t i = 0; i < cert.adjoint[k].size(); ++i) {
                io::ordered_json e;
                e["stage"] = k;
                e["node"] = i;
                e["p"] = io::to_json(cert.adjoint[k][i]);
                adj.push_back(std::move(e));
            }
        doc["adjoint"] = std::move(adj);
    }
    return io::dump(doc);
}

}  // namespace mfdlq
