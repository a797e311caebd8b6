#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfdlq/error.hpp"
#include "mfdlq/json_writer.hpp"
#include "mfdlq/linalg.hpp"
#include "mfdlq/problem.hpp"
#include "mfdlq/riccati.hpp"

namespace mfdlq {

// Exact scenario tree for Rademacher noise. Node i at stage k+1 is a child of
// node i/2 at stage k; even children saw w = +sigma, odd children w = -sigma.

struct TreeNode {
    double probability = 1.0;
    double noise = 0.0;       // w leading into this node (0 at the root)
    std::size_t parent = 0;   // index at the previous stage
};

struct ScenarioTree {
    std::size_t depth = 0;  // N
    std::size_t r = 0;
    double sigma = 1.0;
    std::vector<std::vector<TreeNode>> nodes;  // nodes[k].size() == 2^k

    [[nodiscard]] std::size_t decision_dim() const { return r * ((std::size_t{1} << depth) - 1); }

    /// First stacked-control index of node i at stage k (k < depth).
    [[nodiscard]] std::size_t offset(std::size_t k, std::size_t i) const {
        return r * (((std::size_t{1} << k) - 1) + i);
    }

    /// w_1..w_k along the path from the root to node i at stage k.
    [[nodiscard]] std::vector<double> noise_history(std::size_t k, std::size_t i) const {
        std::vector<double> h(k);
        for (std::size_t s = k; s > 0; --s) {
            h[s - 1] = nodes[s][i].noise;
            i = nodes[s][i].parent;
        }
        return h;
    }
};

/// One control per information node: u[k][i] is the r-vector at node i of stage k.
struct TreeControl {
    std::vector<std::vector<Vector>> u;

    [[nodiscard]] Vector stacked(const ScenarioTree& tree) const {
        Vector out(static_cast<Eigen::Index>(tree.decision_dim()));
        const auto r = static_cast<Eigen::Index>(tree.r);
        for (std::size_t k = 0; k < u.size(); ++k)
            for (std::size_t i = 0; i < u[k].size(); ++i)
                out.segment(static_cast<Eigen::Index>(tree.offset(k, i)), r) = u[k][i];
        return out;
    }

    static TreeControl unstack(const ScenarioTree& tree, const Vector& flat) {
        if (static_cast<std::size_t>(flat.size()) != tree.decision_dim())
            throw DimensionError("stacked control has length " + std::to_string(flat.size()) +
                                 ", tree needs " + std::to_string(tree.decision_dim()));
        const auto r = static_cast<Eigen::Index>(tree.r);
        TreeControl c;
        c.u.resize(tree.depth);
        for (std::size_t k = 0; k < tree.depth; ++k) {
            c.u[k].resize(tree.nodes[k].size());
            for (std::size_t i = 0; i < c.u[k].size(); ++i)
                c.u[k][i] = flat.segment(static_cast<Eigen::Index>(tree.offset(k, i)), r);
        }
        return c;
    }
};

inline constexpr std::size_t kDefaultMaxDecisionDim = 4096;

inline ScenarioTree build_tree(const ProblemSpec& spec,
                               std::size_t max_decision_dim = kDefaultMaxDecisionDim) {
    if (spec.noise.kind != NoiseKind::Rademacher)
        throw WrongNoiseKind("scenario tree requires Rademacher noise");
    detail::require_consistent(spec);
    // Saturate instead of overflowing for absurd horizons.
    const std::size_t required =
        spec.N >= 48 ? std::numeric_limits<std::size_t>::max()
                     : spec.r * ((std::size_t{1} << spec.N) - 1);
    if (required > max_decision_dim) throw TreeTooLarge(required, max_decision_dim);

    ScenarioTree tree;
    tree.depth = spec.N;
    tree.r = spec.r;
    tree.sigma = spec.noise.sigma();
    tree.nodes.resize(spec.N + 1);
    tree.nodes[0] = {TreeNode{1.0, 0.0, 0}};
    for (std::size_t k = 0; k < spec.N; ++k) {
        const auto& parents = tree.nodes[k];
        auto& children = tree.nodes[k + 1];
        children.resize(2 * parents.size());
        for (std::size_t i = 0; i < parents.size(); ++i) {
            const double p = 0.5 * parents[i].probability;
            children[2 * i] = TreeNode{p, tree.sigma, i};
            children[2 * i + 1] = TreeNode{p, -tree.sigma, i};
        }
    }
    return tree;
}

namespace detail {

inline void check_controls(const ScenarioTree& tree, const TreeControl& controls) {
    if (controls.u.size() != tree.depth)
        throw DimensionError("tree control has " + std::to_string(controls.u.size()) +
                             " stages, tree has " + std::to_string(tree.depth));
    for (std::size_t k = 0; k < tree.depth; ++k) {
        if (controls.u[k].size() != tree.nodes[k].size())
            throw DimensionError("tree control stage " + std::to_string(k) + " has " +
                                 std::to_string(controls.u[k].size()) + " nodes, expected " +
                                 std::to_string(tree.nodes[k].size()));
        for (const auto& v : controls.u[k])
            if (static_cast<std::size_t>(v.size()) != tree.r)
                throw DimensionError("tree control vector has wrong length");
    }
}

}  // namespace detail

/// Node states and exact stage means of the controlled system on the tree.
template <typename Scalar = double>
struct TreeTrajectory {
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    std::vector<std::vector<Vec>> state;  // state[k][i]
    std::vector<Vec> mean_state;          // E x_k
    std::vector<Vec> mean_control;        // E u_k
};

template <typename Scalar = double>
TreeTrajectory<Scalar> tree_states(const ProblemSpec& spec, const ScenarioTree& tree,
                                   const TreeControl& controls) {
    using Vec = typename TreeTrajectory<Scalar>::Vec;
    detail::check_controls(tree, controls);
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto r = static_cast<Eigen::Index>(spec.r);
    TreeTrajectory<Scalar> t;
    t.state.resize(tree.depth + 1);
    t.mean_state.resize(tree.depth + 1);
    t.mean_control.resize(tree.depth);
    t.state[0] = {spec.x0.cast<Scalar>()};
    for (std::size_t k = 0;; ++k) {
        Vec mean = Vec::Zero(n);
        for (std::size_t i = 0; i < tree.nodes[k].size(); ++i)
            mean += static_cast<Scalar>(tree.nodes[k][i].probability) * t.state[k][i];
        t.mean_state[k] = mean;
        if (k == tree.depth) break;

        const auto& s = spec.stages[k];
        Vec umean = Vec::Zero(r);
        for (std::size_t i = 0; i < tree.nodes[k].size(); ++i)
            umean += static_cast<Scalar>(tree.nodes[k][i].probability) *
                     controls.u[k][i].cast<Scalar>();
        t.mean_control[k] = umean;

        const auto A = s.A.cast<Scalar>();
        const auto B = s.B.cast<Scalar>();
        const auto C = s.C.cast<Scalar>();
        const auto D = s.D.cast<Scalar>();
        const Vec drift_mf = s.Abar.cast<Scalar>() * mean;
        const Vec diff_mf = s.Cbar.cast<Scalar>() * mean;
        auto& next = t.state[k + 1];
        next.resize(tree.nodes[k + 1].size());
        for (std::size_t c = 0; c < next.size(); ++c) {
            const auto& node = tree.nodes[k + 1][c];
            const Vec& x = t.state[k][node.parent];
            const Vec u = controls.u[k][node.parent].cast<Scalar>();
            const auto w = static_cast<Scalar>(node.noise);
            next[c] = A * x + drift_mf + B * u + (C * x + diff_mf + D * u) * w;
        }
    }
    return t;
}

/// Cost functional evaluated by exhaustive enumeration of the tree (no sampling),
/// including the mean-field terms. Scalar may be widened (e.g. long double) for
/// finite-difference checks.
template <typename Scalar = double>
Scalar evaluate_tree_cost(const ProblemSpec& spec, const ScenarioTree& tree,
                          const TreeControl& controls) {
    const auto t = tree_states<Scalar>(spec, tree, controls);
    Scalar total = 0;
    for (std::size_t k = 0; k <= tree.depth; ++k) {
        const bool terminal = k == tree.depth;
        const auto Q = (terminal ? spec.terminalQ : spec.stages[k].Q).template cast<Scalar>();
        const auto Qbar =
            (terminal ? spec.terminalQbar : spec.stages[k].Qbar).template cast<Scalar>();
        Scalar stage = 0;
        for (std::size_t i = 0; i < tree.nodes[k].size(); ++i) {
            const auto p = static_cast<Scalar>(tree.nodes[k][i].probability);
            const auto& x = t.state[k][i];
            stage += p * x.dot(Q * x);
            if (!terminal) {
                const auto R = spec.stages[k].R.template cast<Scalar>();
                const auto u = controls.u[k][i].template cast<Scalar>();
                stage += p * u.dot(R * u);
            }
        }
        stage += t.mean_state[k].dot(Qbar * t.mean_state[k]);
        if (!terminal) {
            const auto Rbar = spec.stages[k].Rbar.template cast<Scalar>();
            stage += t.mean_control[k].dot(Rbar * t.mean_control[k]);
        }
        total += stage;
    }
    return total;
}

/// J(u) = u'Hu + 2g'u + c over the stacked adapted controls.
struct QuadraticCost {
    Matrix H;
    Vector g;
    double c = 0.0;

    [[nodiscard]] double operator()(const Vector& u) const { return u.dot(H * u) + 2.0 * g.dot(u) + c; }
};

/// Builds the exact quadratic form of the cost. Each node state is carried as an
/// affine map x = F u + f of the stacked controls; stage means are the
/// probability-weighted combinations of those maps.
inline QuadraticCost assemble_cost(const ProblemSpec& spec, const ScenarioTree& tree) {
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto r = static_cast<Eigen::Index>(spec.r);
    const auto m = static_cast<Eigen::Index>(tree.decision_dim());

    QuadraticCost qc;
    qc.H = Matrix::Zero(m, m);
    qc.g = Vector::Zero(m);
    qc.c = 0.0;

    std::vector<Matrix> F{Matrix::Zero(n, m)};
    std::vector<Vector> f{spec.x0};

    auto add_state_terms = [&](const Matrix& Q, const Matrix& Qbar, const std::vector<Matrix>& Fs,
                               const std::vector<Vector>& fs, const std::vector<TreeNode>& nodes,
                               Matrix& Fz, Vector& fz) {
        Fz = Matrix::Zero(n, m);
        fz = Vector::Zero(n);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double p = nodes[i].probability;
            Fz += p * Fs[i];
            fz += p * fs[i];
            if (!linalg::is_zero(Q)) {
                const Matrix QF = Q * Fs[i];
                const Vector Qf = Q * fs[i];
                qc.H.noalias() += p * (Fs[i].transpose() * QF);
                qc.g.noalias() += p * (QF.transpose() * fs[i]);
                qc.c += p * fs[i].dot(Qf);
            }
        }
        if (!linalg::is_zero(Qbar)) {
            const Matrix QF = Qbar * Fz;
            qc.H.noalias() += Fz.transpose() * QF;
            qc.g.noalias() += QF.transpose() * fz;
            qc.c += fz.dot(Qbar * fz);
        }
    };

    for (std::size_t k = 0; k < tree.depth; ++k) {
        const auto& s = spec.stages[k];
        const auto& nodes = tree.nodes[k];
        Matrix Fz;
        Vector fz;
        add_state_terms(s.Q, s.Qbar, F, f, nodes, Fz, fz);

        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto oi = static_cast<Eigen::Index>(tree.offset(k, i));
            qc.H.block(oi, oi, r, r) += nodes[i].probability * s.R;
        }
        if (!linalg::is_zero(s.Rbar)) {
            for (std::size_t i = 0; i < nodes.size(); ++i)
                for (std::size_t j = 0; j < nodes.size(); ++j) {
                    const auto oi = static_cast<Eigen::Index>(tree.offset(k, i));
                    const auto oj = static_cast<Eigen::Index>(tree.offset(k, j));
                    qc.H.block(oi, oj, r, r) +=
                        (nodes[i].probability * nodes[j].probability) * s.Rbar;
                }
        }

        const auto& children = tree.nodes[k + 1];
        std::vector<Matrix> Fn(children.size());
        std::vector<Vector> fn(children.size());
        for (std::size_t c = 0; c < children.size(); ++c) {
            const auto& node = children[c];
            const double w = node.noise;
            const Matrix Ax = s.A + w * s.C;
            const Matrix Am = s.Abar + w * s.Cbar;
            Fn[c] = Ax * F[node.parent] + Am * Fz;
            Fn[c].middleCols(static_cast<Eigen::Index>(tree.offset(k, node.parent)), r) +=
                s.B + w * s.D;
            fn[c] = Ax * f[node.parent] + Am * fz;
        }
        F = std::move(Fn);
        f = std::move(fn);
    }
    Matrix Fz;
    Vector fz;
    add_state_terms(spec.terminalQ, spec.terminalQbar, F, f, tree.nodes[tree.depth], Fz, fz);
    qc.H = linalg::symmetrize(qc.H);
    return qc;
}

struct ExactSolution {
    TreeControl controls;
    Vector stacked;
    double value = 0.0;
    QuadraticCost cost;
};

/// Minimizes the exact quadratic form over all adapted controls via H u = -g.
inline ExactSolution solve_exact(const ProblemSpec& spec, const ScenarioTree& tree) {
    ExactSolution sol;
    sol.cost = assemble_cost(spec, tree);
    const auto& qc = sol.cost;
    Eigen::LLT<Matrix> llt(qc.H);
    if (llt.info() != Eigen::Success)
        throw SingularHessian("tree cost Hessian is not positive definite");
    sol.stacked = -llt.solve(qc.g);
    const double gu = qc.g.dot(sol.stacked);
    const double uHu = sol.stacked.dot(qc.H * sol.stacked);
    const double direct = qc.c + 2.0 * gu + uHu;
    const double reduced = qc.c + gu;  // c - g'H^{-1}g
    const double scale = std::max({std::abs(qc.c), std::abs(gu), std::abs(uHu)});
    if (std::abs(direct - reduced) > 1e-12 * scale)
        throw std::logic_error("tree optimum: value formulas disagree (" +
                               io::format_double(direct) + " vs " + io::format_double(reduced) +
                               ")");
    sol.value = direct;
    sol.controls = TreeControl::unstack(tree, sol.stacked);
    return sol;
}

/// Applies u = -K_k (x - E x_k) - Kbar_k E x_k node by node, with E x_k the exact
/// tree mean of the resulting closed loop.
inline TreeControl feedback_tree_controls(const ProblemSpec& spec, const RiccatiSolution& sol,
                                          const ScenarioTree& tree) {
    if (sol.horizon() != tree.depth) throw DimensionError("solution horizon does not match tree");
    const auto n = static_cast<Eigen::Index>(spec.n);
    TreeControl out;
    out.u.resize(tree.depth);
    std::vector<Vector> x{spec.x0};
    for (std::size_t k = 0; k < tree.depth; ++k) {
        const auto& nodes = tree.nodes[k];
        Vector mean = Vector::Zero(n);
        for (std::size_t i = 0; i < nodes.size(); ++i) mean += nodes[i].probability * x[i];
        out.u[k].resize(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) out.u[k][i] = feedback(sol, k, x[i], mean);

        const auto& s = spec.stages[k];
        const auto& children = tree.nodes[k + 1];
        std::vector<Vector> next(children.size());
        for (std::size_t c = 0; c < children.size(); ++c) {
            const auto& node = children[c];
            const Vector& xp = x[node.parent];
            const Vector& u = out.u[k][node.parent];
            next[c] = s.A * xp + s.Abar * mean + s.B * u +
                      (s.C * xp + s.Cbar * mean + s.D * u) * node.noise;
        }
        x = std::move(next);
    }
    return out;
}

struct ComparisonReport {
    double value_riccati = 0.0;
    double value_tree = 0.0;
    double value_gap = 0.0;    // |value_tree - value_riccati|
    double control_gap = 0.0;  // max-norm over nodes of u*_tree - Riccati feedback
    bool pass = false;
};

inline constexpr double kValueGapRelTol = 1e-8;
inline constexpr double kControlGapTol = 1e-7;

inline ComparisonReport compare(const ProblemSpec& spec, const RiccatiSolution& sol,
                                const ScenarioTree& tree, const ExactSolution& exact) {
    if (sol.horizon() != tree.depth || sol.K.front().rows() != static_cast<Eigen::Index>(spec.r) ||
        sol.K.front().cols() != static_cast<Eigen::Index>(spec.n))
        throw DimensionError("solution does not match problem dimensions");
    ComparisonReport rep;
    rep.value_riccati = optimal_value(sol, spec.x0);
    rep.value_tree = exact.value;
    rep.value_gap = std::abs(rep.value_tree - rep.value_riccati);

    const auto traj = tree_states<double>(spec, tree, exact.controls);
    for (std::size_t k = 0; k < tree.depth; ++k)
        for (std::size_t i = 0; i < tree.nodes[k].size(); ++i) {
            const Vector u = feedback(sol, k, traj.state[k][i], traj.mean_state[k]);
            rep.control_gap =
                std::max(rep.control_gap, linalg::max_abs(exact.controls.u[k][i] - u));
        }
    const double scale = std::max(std::abs(rep.value_tree), std::abs(rep.value_riccati));
    rep.pass = rep.value_gap <= kValueGapRelTol * scale && rep.control_gap <= kControlGapTol;
    return rep;
}

inline ComparisonReport compare(const ProblemSpec& spec, const RiccatiSolution& sol,
                                const ScenarioTree& tree) {
    return compare(spec, sol, tree, solve_exact(spec, tree));
}

inline std::string serialize_comparison(const ComparisonReport& rep) {
    io::ordered_json doc;
    doc["value_riccati"] = rep.value_riccati;
    doc["value_tree"] = rep.value_tree;
    doc["value_gap"] = rep.value_gap;
    doc["control_gap"] = rep.control_gap;
    doc["pass"] = rep.pass;
    return io::dump(doc);
}

/// `stage,node,probability,state_0..,control_0..`; leaves leave the control columns empty.
inline std::string tree_csv(const ProblemSpec& spec, const ScenarioTree& tree,
                            const TreeControl& controls) {
    const auto traj = tree_states<double>(spec, tree, controls);
    std::string out = "stage,node,probability";
    for (std::size_t i = 0; i < spec.n; ++i) out += ",state_" + std::to_string(i);
    for (std::size_t i = 0; i < spec.r; ++i) out += ",control_" + std::to_string(i);
    out += "\n";
    for (std::size_t k = 0; k <= tree.depth; ++k)
        for (std::size_t i = 0; i < tree.nodes[k].size(); ++i) {
            out += std::to_string(k) + "," + std::to_string(i) + "," +
                   io::format_double(tree.nodes[k][i].probability);
            for (Eigen::Index j = 0; j < traj.state[k][i].size(); ++j)
                out += "," + io::format_double(traj.state[k][i](j));
            for (std::size_t j = 0; j < spec.r; ++j)
                out += k < tree.depth
                           ? "," + io::format_double(controls.u[k][i](static_cast<Eigen::Index>(j)))
                           : std::string(",");
            out += "\n";
        }
    return out;
}

}  // namespace mfdlq
