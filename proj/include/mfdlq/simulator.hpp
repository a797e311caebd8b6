#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "mfdlq/error.hpp"
#include "mfdlq/json_writer.hpp"
#include "mfdlq/linalg.hpp"
#include "mfdlq/problem.hpp"
#include "mfdlq/riccati.hpp"

namespace mfdlq {

// ---------------------------------------------------------------------------
// Noise streams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the stream for one path; depends only on (seed, path).
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t path) {
    return splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632be59bd9b4e019ULL));
}

/// Draws i.i.d. noise values: N(0, variance) or +/-sqrt(variance) with probability 1/2.
class NoiseSampler {
public:
    NoiseSampler(const NoiseModel& model, std::uint64_t seed)
        : kind_(model.kind), sigma_(model.sigma()), engine_(seed), normal_(0.0, model.sigma()) {}

    double operator()() {
        if (kind_ == NoiseKind::Rademacher) return (engine_() >> 63) != 0 ? sigma_ : -sigma_;
        return normal_(engine_);
    }

private:
    NoiseKind kind_;
    double sigma_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

inline std::vector<double> draw_noise(const NoiseModel& model, std::size_t count,
                                      std::uint64_t seed) {
    NoiseSampler sampler(model, seed);
    std::vector<double> out(count);
    for (auto& w : out) w = sampler();
    return out;
}

/// Worker count: `requested` if nonzero, else MFDLQ_THREADS if set and nonzero,
/// else hardware concurrency.
inline std::size_t resolve_threads(std::size_t requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MFDLQ_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

struct ZeroPolicy {};

struct OpenLoopPolicy {
    std::vector<Vector> controls;  // one r-vector per stage
};

struct RiccatiFeedbackPolicy {
    RiccatiSolution solution;
};

using Policy = std::variant<RiccatiFeedbackPolicy, OpenLoopPolicy, ZeroPolicy>;

/// Exact mean trajectory under the optimal feedback:
/// z_0 = x0, z_{k+1} = (A+Abar) z_k + B ubar_k with ubar_k = -Kbar_k z_k.
inline std::vector<Vector> propagate_mean(const ProblemSpec& spec, const RiccatiSolution& sol) {
    if (sol.horizon() != spec.N) throw DimensionError("solution horizon does not match problem");
    std::vector<Vector> z(spec.N + 1);
    z[0] = spec.x0;
    for (std::size_t k = 0; k < spec.N; ++k) {
        const auto& s = spec.stages[k];
        const Vector ubar = -sol.Kbar[k] * z[k];
        z[k + 1] = (s.A + s.Abar) * z[k] + s.B * ubar;
    }
    return z;
}

namespace detail {

struct MeanPath {
    std::vector<Vector> state;    // E x_k, k = 0..N
    std::vector<Vector> control;  // E u_k, k = 0..N-1
};

inline MeanPath analytic_means(const ProblemSpec& spec, const Policy& policy) {
    const auto r = static_cast<Eigen::Index>(spec.r);
    MeanPath m;
    m.control.resize(spec.N);
    if (const auto* fb = std::get_if<RiccatiFeedbackPolicy>(&policy)) {
        m.state = propagate_mean(spec, fb->solution);
        for (std::size_t k = 0; k < spec.N; ++k) m.control[k] = -fb->solution.Kbar[k] * m.state[k];
        return m;
    }
    m.state.resize(spec.N + 1);
    m.state[0] = spec.x0;
    for (std::size_t k = 0; k < spec.N; ++k) {
        const auto& s = spec.stages[k];
        if (const auto* ol = std::get_if<OpenLoopPolicy>(&policy))
            m.control[k] = ol->controls[k];
        else
            m.control[k] = Vector::Zero(r);
        m.state[k + 1] = (s.A + s.Abar) * m.state[k] + s.B * m.control[k];
    }
    return m;
}

inline void check_policy(const ProblemSpec& spec, const Policy& policy) {
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto r = static_cast<Eigen::Index>(spec.r);
    if (const auto* fb = std::get_if<RiccatiFeedbackPolicy>(&policy)) {
        const auto& sol = fb->solution;
        if (sol.horizon() != spec.N || sol.Kbar.size() != spec.N)
            throw DimensionError("feedback horizon does not match problem");
        for (std::size_t k = 0; k < spec.N; ++k)
            if (sol.K[k].rows() != r || sol.K[k].cols() != n || sol.Kbar[k].rows() != r ||
                sol.Kbar[k].cols() != n)
                throw DimensionError("gain shape does not match problem at stage " +
                                     std::to_string(k));
    } else if (const auto* ol = std::get_if<OpenLoopPolicy>(&policy)) {
        if (ol->controls.size() != spec.N)
            throw DimensionError("open-loop policy needs " + std::to_string(spec.N) + " controls");
        for (const auto& u : ol->controls)
            if (u.size() != r) throw DimensionError("open-loop control has wrong length");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

struct SimulationOptions {
    /// Mean-field cost terms from the ensemble average instead of the exact mean
    /// (biased at finite sample size; for comparison only).
    bool sample_mean = false;
    /// 0 = MFDLQ_THREADS / hardware concurrency.
    std::size_t threads = 0;
};

struct SimulationReport {
    std::size_t num_paths = 0;
    std::vector<double> per_path_cost;
    double mean_cost = 0.0;
    double std_error = 0.0;
    std::vector<Vector> state_mean_trace;     // empirical
    std::vector<Vector> analytic_mean_trace;  // exact
};

inline constexpr std::size_t kSimulationBlock = 1024;

/// Simulates `num_paths` independent paths of the controlled system.
/// Path p draws its noise from stream_seed(seed, p); blocks of paths are reduced
/// in index order, so the report does not depend on the worker count.
inline SimulationReport simulate(const ProblemSpec& spec, const Policy& policy,
                                 std::size_t num_paths, std::uint64_t seed,
                                 const SimulationOptions& options = {}) {
    if (num_paths == 0) throw Error("num_paths must be >= 1");
    detail::require_consistent(spec);
    detail::check_policy(spec, policy);

    const std::size_t N = spec.N;
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto r = static_cast<Eigen::Index>(spec.r);
    const detail::MeanPath means = detail::analytic_means(spec, policy);
    const auto* fb = std::get_if<RiccatiFeedbackPolicy>(&policy);
    const auto* ol = std::get_if<OpenLoopPolicy>(&policy);

    const std::size_t num_blocks = (num_paths + kSimulationBlock - 1) / kSimulationBlock;
    struct BlockSums {
        std::vector<Vector> x, u;
    };
    std::vector<BlockSums> blocks(num_blocks);
    SimulationReport rep;
    rep.num_paths = num_paths;
    rep.per_path_cost.assign(num_paths, 0.0);

    auto run_block = [&](std::size_t b) {
        BlockSums& sums = blocks[b];
        sums.x.assign(N + 1, Vector::Zero(n));
        sums.u.assign(N, Vector::Zero(r));
        const std::size_t first = b * kSimulationBlock;
        const std::size_t last = std::min(num_paths, first + kSimulationBlock);
        Vector x(n), u(r);
        for (std::size_t p = first; p < last; ++p) {
            NoiseSampler noise(spec.noise, stream_seed(seed, p));
            x = spec.x0;
            double cost = 0.0;
            for (std::size_t k = 0; k < N; ++k) {
                const auto& s = spec.stages[k];
                const Vector& z = means.state[k];
                if (fb)
                    u = -fb->solution.K[k] * (x - z) - fb->solution.Kbar[k] * z;
                else if (ol)
                    u = ol->controls[k];
                else
                    u.setZero();
                cost += x.dot(s.Q * x) + u.dot(s.R * u);
                sums.x[k] += x;
                sums.u[k] += u;
                const double w = noise();
                x = s.A * x + s.Abar * z + s.B * u + (s.C * x + s.Cbar * z + s.D * u) * w;
            }
            cost += x.dot(spec.terminalQ * x);
            sums.x[N] += x;
            rep.per_path_cost[p] = cost;
        }
    };

    const std::size_t workers = std::min(resolve_threads(options.threads), num_blocks);
    if (workers <= 1) {
        for (std::size_t b = 0; b < num_blocks; ++b) run_block(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t b = next++; b < num_blocks; b = next++) run_block(b);
            });
        for (auto& th : pool) th.join();
    }

    const double M = static_cast<double>(num_paths);
    rep.state_mean_trace.assign(N + 1, Vector::Zero(n));
    std::vector<Vector> control_mean(N, Vector::Zero(r));
    for (const auto& b : blocks) {
        for (std::size_t k = 0; k <= N; ++k) rep.state_mean_trace[k] += b.x[k];
        for (std::size_t k = 0; k < N; ++k) control_mean[k] += b.u[k];
    }
    for (auto& v : rep.state_mean_trace) v /= M;
    for (auto& v : control_mean) v /= M;
    rep.analytic_mean_trace = means.state;

    // Mean-field terms are the same for every path.
    const auto& xm = options.sample_mean ? rep.state_mean_trace : means.state;
    const auto& um = options.sample_mean ? control_mean : means.control;
    double meanfield_cost = xm[N].dot(spec.terminalQbar * xm[N]);
    for (std::size_t k = 0; k < N; ++k)
        meanfield_cost += xm[k].dot(spec.stages[k].Qbar * xm[k]) +
                          um[k].dot(spec.stages[k].Rbar * um[k]);
    if (meanfield_cost != 0.0)
        for (auto& c : rep.per_path_cost) c += meanfield_cost;

    rep.mean_cost = linalg::pairwise_sum(rep.per_path_cost.begin(), rep.per_path_cost.end()) / M;
    if (num_paths > 1) {
        // Shifted by the first cost so identical paths give exactly zero spread.
        const double shift = rep.per_path_cost.front();
        std::vector<double> d(num_paths);
        for (std::size_t p = 0; p < num_paths; ++p) d[p] = rep.per_path_cost[p] - shift;
        const double dmean = linalg::pairwise_sum(d.begin(), d.end()) / M;
        for (auto& v : d) v = (v - dmean) * (v - dmean);
        const double var = linalg::pairwise_sum(d.begin(), d.end()) / (M - 1.0);
        rep.std_error = std::sqrt(var / M);
    }
    return rep;
}

inline std::string per_path_csv(const SimulationReport& rep) {
    std::string out = "path,cost\n";
    for (std::size_t p = 0; p < rep.per_path_cost.size(); ++p)
        out += std::to_string(p) + "," + io::format_double(rep.per_path_cost[p]) + "\n";
    return out;
}

inline std::string trace_csv(const std::vector<Vector>& trace) {
    std::string out = "k";
    const Eigen::Index n = trace.empty() ? 0 : trace.front().size();
    for (Eigen::Index i = 0; i < n; ++i) out += ",comp_" + std::to_string(i);
    out += "\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out += std::to_string(k);
        for (Eigen::Index i = 0; i < n; ++i) out += "," + io::format_double(trace[k](i));
        out += "\n";
    }
    return out;
}

inline std::string serialize_report(const SimulationReport& rep) {
    io::ordered_json doc;
    auto traces = [](const std::vector<Vector>& t) {
        io::ordered_json arr = io::ordered_json::array();
        for (const auto& v : t) arr.push_back(io::to_json(v));
        return arr;
    };
    doc["num_paths"] = rep.num_paths;
    doc["mean_cost"] = rep.mean_cost;
    doc["std_error"] = rep.std_error;
    doc["state_mean_trace"] = traces(rep.state_mean_trace);
    doc["analytic_mean_trace"] = traces(rep.analytic_mean_trace);
    return io::dump(doc);
}

}  // namespace mfdlq
