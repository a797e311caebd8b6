// mfdlq: command-line driver for the mean-field LQ toolkit.
//
// Exit codes: 0 = command's check passed, 1 = check failed, 2 = usage/input error.
// Data goes to stdout or --out; diagnostics go to stderr.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mfdlq/mfdlq.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct Globals {
    std::string out;
    std::uint64_t seed = 0;
    bool quiet = false;
};

class Log {
public:
    explicit Log(bool quiet) : quiet_(quiet) {}
    template <typename... Ts>
    void operator()(const Ts&... parts) const {
        if (quiet_) return;
        (std::cerr << ... << parts) << '\n';
    }

private:
    bool quiet_;
};

void emit(const Globals& g, const std::string& text) {
    if (g.out.empty())
        std::cout << text;
    else
        mfdlq::io::write_file(g.out, text);
}

std::string validation_json(const mfdlq::ValidationReport& rep) {
    mfdlq::io::ordered_json doc;
    doc["ok"] = rep.ok();
    mfdlq::io::ordered_json list = mfdlq::io::ordered_json::array();
    for (const auto& v : rep.violations) {
        mfdlq::io::ordered_json e;
        e["location"] = v.location;
        e["description"] = v.description;
        e["value"] = v.value;
        list.push_back(std::move(e));
    }
    doc["violations"] = std::move(list);
    return mfdlq::io::dump(doc);
}

// Loads and validates; returns nullopt (after logging) when the weights fail validation.
std::optional<mfdlq::ProblemSpec> load_valid(const std::string& path, const Log& log) {
    auto spec = mfdlq::load_problem_file(path);
    const auto rep = mfdlq::validate(spec);
    if (!rep.ok()) {
        for (const auto& v : rep.violations)
            log("violation: ", v.location, ": ", v.description, " (",
                mfdlq::io::format_double(v.value), ")");
        return std::nullopt;
    }
    return spec;
}

int cmd_validate(const Globals& g, const std::string& file) {
    const Log log(g.quiet);
    const auto spec = mfdlq::load_problem_file(file);
    const auto rep = mfdlq::validate(spec);
    emit(g, validation_json(rep));
    for (const auto& v : rep.violations) log("violation: ", v.location, ": ", v.description);
    return rep.ok() ? kPass : kFail;
}

int cmd_solve(const Globals& g, const std::string& file, bool classical) {
    const Log log(g.quiet);
    const auto spec = load_valid(file, log);
    if (!spec) return kFail;
    const auto sol = classical ? mfdlq::solve_classical(*spec) : mfdlq::solve_meanfield(*spec);
    const double value = mfdlq::optimal_value(sol, spec->x0);
    if (g.out.empty()) {
        std::cout << mfdlq::serialize_solution(sol, spec->x0);
    } else {
        mfdlq::io::write_file(g.out, mfdlq::serialize_solution(sol, spec->x0));
        std::cout << "optimal_value " << mfdlq::io::format_double(value) << '\n';
    }
    log("solved ", classical ? "classical" : "mean-field", " recursion, N=", spec->N,
        ", optimal value ", mfdlq::io::format_double(value));
    return kPass;
}

struct SimulateArgs {
    std::string file;
    std::size_t paths = 10000;
    std::string policy = "riccati";
    std::string csv;
    std::string trace_csv;
    bool sample_mean = false;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
    const Log log(g.quiet);
    if (a.paths == 0) {
        log("error: --paths must be >= 1");
        return kUsage;
    }
    const auto spec = mfdlq::load_problem_file(a.file);
    mfdlq::Policy policy = mfdlq::ZeroPolicy{};
    if (a.policy == "riccati") {
        const auto rep = mfdlq::validate(spec);
        if (!rep.ok()) {
            log("error: problem fails validation; riccati policy unavailable");
            return kFail;
        }
        policy = mfdlq::RiccatiFeedbackPolicy{mfdlq::solve_meanfield(spec)};
    }
    mfdlq::SimulationOptions opts;
    opts.sample_mean = a.sample_mean;
    const auto rep = mfdlq::simulate(spec, policy, a.paths, g.seed, opts);
    emit(g, mfdlq::serialize_report(rep));
    if (!a.csv.empty()) mfdlq::io::write_file(a.csv, mfdlq::per_path_csv(rep));
    if (!a.trace_csv.empty()) {
        mfdlq::io::write_file(a.trace_csv + ".analytic.csv",
                              mfdlq::trace_csv(rep.analytic_mean_trace));
        mfdlq::io::write_file(a.trace_csv + ".empirical.csv",
                              mfdlq::trace_csv(rep.state_mean_trace));
    }
    log("simulated ", a.paths, " paths: mean cost ", mfdlq::io::format_double(rep.mean_cost),
        " +/- ", mfdlq::io::format_double(rep.std_error));
    return kPass;
}

int cmd_oracle(const Globals& g, const std::string& file, std::size_t max_dim,
               const std::string& tree_csv) {
    const Log log(g.quiet);
    const auto spec = load_valid(file, log);
    if (!spec) return kFail;
    const auto sol = mfdlq::solve_meanfield(*spec);
    const auto tree = mfdlq::build_tree(*spec, max_dim);
    const auto exact = mfdlq::solve_exact(*spec, tree);
    const auto rep = mfdlq::compare(*spec, sol, tree, exact);
    emit(g, mfdlq::serialize_comparison(rep));
    if (!tree_csv.empty())
        mfdlq::io::write_file(tree_csv, mfdlq::tree_csv(*spec, tree, exact.controls));
    log("value_gap ", mfdlq::io::format_double(rep.value_gap), ", control_gap ",
        mfdlq::io::format_double(rep.control_gap), rep.pass ? " (pass)" : " (FAIL)");
    return rep.pass ? kPass : kFail;
}

struct GenerateArgs {
    std::size_t n = 0, r = 0, N = 0;
    bool meanfield = false;
    std::string noise = "rademacher";
    double variance = 1.0;
};

int cmd_generate(const Globals& g, const GenerateArgs& a) {
    mfdlq::NoiseModel noise;
    noise.kind = a.noise == "gaussian" ? mfdlq::NoiseKind::Gaussian : mfdlq::NoiseKind::Rademacher;
    noise.variance = a.variance;
    if (a.n == 0 || a.r == 0 || a.N == 0 || !(a.variance > 0.0)) {
        Log(g.quiet)("error: --n, --r, --N and --variance must be positive");
        return kUsage;
    }
    emit(g, mfdlq::serialize_problem(
                mfdlq::generate_random(a.n, a.r, a.N, g.seed, a.meanfield, noise)));
    return kPass;
}

int cmd_certify(const Globals& g, const std::string& file, const std::string& solution_file,
                std::size_t max_dim, bool verbose) {
    const Log log(g.quiet);
    const auto spec = load_valid(file, log);
    if (!spec) return kFail;
    const auto sol = solution_file.empty()
                         ? mfdlq::solve_meanfield(*spec)
                         : mfdlq::load_solution(mfdlq::io::read_file(solution_file), *spec);
    const auto outcome = mfdlq::certify(*spec, sol, max_dim);

    auto doc = mfdlq::io::ordered_json::parse(
        mfdlq::serialize_certificate(outcome.certificate, verbose));
    doc["comparison"] = mfdlq::io::ordered_json::parse(
        mfdlq::serialize_comparison(outcome.comparison));
    doc["pass"] = outcome.pass;
    emit(g, mfdlq::io::dump(doc));
    log("max stationarity residual ", mfdlq::io::format_double(outcome.certificate.max_residual),
        ", value_gap ", mfdlq::io::format_double(outcome.comparison.value_gap),
        ", control_gap ", mfdlq::io::format_double(outcome.comparison.control_gap),
        outcome.pass ? " (pass)" : " (FAIL)");
    return outcome.pass ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field discrete-time LQ: Riccati synthesis, simulation, exact tree oracle"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--out", g.out, "Write the command's document to this file");
    app.add_option("--seed", g.seed, "Random seed (simulate, generate)");
    app.add_flag("--quiet", g.quiet, "Suppress diagnostics on stderr");

    std::string file;
    auto* validate = app.add_subcommand("validate", "Check shapes, symmetry and weight conditions");
    validate->add_option("problem", file, "Problem file")->required();

    bool classical = false;
    auto* solve = app.add_subcommand("solve", "Backward Riccati synthesis");
    solve->add_option("problem", file, "Problem file")->required();
    solve->add_flag("--classical", classical, "Recursion without mean-field terms");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo closed-loop simulation");
    simulate->add_option("problem", sim.file, "Problem file")->required();
    simulate->add_option("--paths", sim.paths, "Number of paths");
    simulate->add_option("--policy", sim.policy, "Control policy")
        ->check(CLI::IsMember({"riccati", "zero"}));
    simulate->add_option("--csv", sim.csv, "Per-path cost CSV");
    simulate->add_option("--trace-csv", sim.trace_csv,
                         "Prefix for analytic/empirical mean trace CSVs");
    simulate->add_flag("--sample-mean", sim.sample_mean,
                       "Mean-field cost terms from the ensemble average (biased)");

    std::size_t max_dim = mfdlq::kDefaultMaxDecisionDim;
    std::string tree_csv;
    auto* oracle = app.add_subcommand("oracle", "Compare the Riccati solution with the exact tree optimum");
    oracle->add_option("problem", file, "Problem file")->required();
    oracle->add_option("--max-dim", max_dim, "Decision-dimension cap");
    oracle->add_option("--tree-csv", tree_csv, "Dump the optimal tree as CSV");

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a random problem satisfying the weight conditions");
    generate->add_option("--n", gen.n, "State dimension")->required();
    generate->add_option("--r", gen.r, "Control dimension")->required();
    generate->add_option("--N", gen.N, "Horizon")->required();
    generate->add_flag("--meanfield", gen.meanfield, "Nonzero mean-field matrices");
    generate->add_option("--noise", gen.noise, "Noise kind")
        ->check(CLI::IsMember({"rademacher", "gaussian"}));
    generate->add_option("--variance", gen.variance, "Noise variance");

    bool verbose = false;
    std::string solution_file;
    auto* certify = app.add_subcommand("certify", "Adjoint stationarity and oracle check");
    certify->add_option("problem", file, "Problem file")->required();
    certify->add_option("--max-dim", max_dim, "Decision-dimension cap");
    certify->add_flag("--verbose", verbose, "Per-node adjoint and residual dump");
    certify->add_option("--solution", solution_file, "Certify this solution file instead of solving")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    const Log log(g.quiet);
    try {
        if (*validate) return cmd_validate(g, file);
        if (*solve) return cmd_solve(g, file, classical);
        if (*simulate) return cmd_simulate(g, sim);
        if (*oracle) return cmd_oracle(g, file, max_dim, tree_csv);
        if (*generate) return cmd_generate(g, gen);
        if (*certify) return cmd_certify(g, file, solution_file, max_dim, verbose);
    } catch (const mfdlq::SingularDenominator& e) {
        log("error: ", e.what());
        return kFail;
    } catch (const mfdlq::SingularHessian& e) {
        log("error: ", e.what());
        return kFail;
    } catch (const mfdlq::Error& e) {
        log("error: ", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        log("internal error: ", e.what());
        return kFail;
    }
    return kUsage;
}
