#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "test_support.hpp"

namespace fs = std::filesystem;
using mfdlq::testing::data_path;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mfdlq_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    static std::string slurp(const std::string& file) {
        std::ifstream in(file, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    CliResult run(const std::string& args, const std::string& env = {}) const {
        const std::string out = path("stdout.txt");
        const std::string cmd = env + (env.empty() ? "" : " ") + "\"" MFDLQ_CLI_PATH "\" " + args +
                                " > \"" + out + "\" 2> \"" + path("stderr.txt") + "\"";
        const int status = std::system(cmd.c_str());
        CliResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        return r;
    }

    fs::path dir_;
};

std::string fixture(const char* name) { return "\"" + data_path(name) + "\""; }

}  // namespace

TEST_F(CliTest, ValidateExitCodes) {
    EXPECT_EQ(run("validate " + fixture("e2_multiplicative.json")).code, 0);
    const auto bad = run("validate " + fixture("r_zero.json"));
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("R_0 not positive definite"), std::string::npos) << bad.out;
    EXPECT_EQ(run("validate " + path("missing.json")).code, 2);
    EXPECT_EQ(run("validate " + fixture("bad_shape.json")).code, 2);
}

TEST_F(CliTest, SolvePrintsOptimalValue) {
    const auto e1 = run("solve " + fixture("e1_deterministic.json") + " --out " + path("sol.json"));
    EXPECT_EQ(e1.code, 0);
    EXPECT_EQ(e1.out, "optimal_value 1.5\n");
    const auto sol = mfdlq::load_solution(slurp(path("sol.json")),
                                          mfdlq::testing::load_fixture("e1_deterministic.json"));
    EXPECT_NEAR(sol.K[0](0, 0), 0.5, 1e-15);

    const auto e3 = run("solve " + fixture("e3_meanfield.json") + " --out " + path("sol3.json"));
    EXPECT_EQ(e3.code, 0);
    EXPECT_EQ(e3.out, "optimal_value 4\n");
    EXPECT_EQ(run("solve " + fixture("e3_meanfield.json") + " --classical").code, 2);
    EXPECT_EQ(run("solve " + fixture("r_zero.json")).code, 1);

    const auto doc = run("solve " + fixture("e1_deterministic.json"));
    EXPECT_NE(doc.out.find("\"optimal_value\": 1.5"), std::string::npos) << doc.out;
}

TEST_F(CliTest, SimulateWritesReportsAndCsv) {
    const auto r = run("simulate " + fixture("e2_multiplicative.json") +
                       " --paths 2000 --seed 4 --policy riccati --csv " + path("paths.csv") +
                       " --trace-csv " + path("trace") + " --out " + path("rep.json"));
    EXPECT_EQ(r.code, 0);
    const std::string csv = slurp(path("paths.csv"));
    EXPECT_EQ(csv.rfind("path,cost\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2001);
    EXPECT_EQ(slurp(path("trace.analytic.csv")).rfind("k,comp_0\n", 0), 0u);
    EXPECT_TRUE(fs::exists(path("trace.empirical.csv")));
    EXPECT_NE(slurp(path("rep.json")).find("\"mean_cost\""), std::string::npos);

    EXPECT_EQ(run("simulate " + fixture("e2_multiplicative.json") + " --policy bogus").code, 2);
    EXPECT_EQ(run("simulate " + fixture("e2_multiplicative.json") + " --paths 0").code, 2);
}

TEST_F(CliTest, SimulateIsByteIdenticalAcrossThreadSettings) {
    const std::string args = "simulate " + fixture("e2_multiplicative.json") +
                             " --paths 5000 --seed 11 --policy zero --csv ";
    EXPECT_EQ(run(args + path("a.csv") + " --out " + path("a.json"), "MFDLQ_THREADS=1").code, 0);
    EXPECT_EQ(run(args + path("b.csv") + " --out " + path("b.json"), "MFDLQ_THREADS=3").code, 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(CliTest, OracleExitCodes) {
    const auto e2 = run("oracle " + fixture("e2_multiplicative.json"));
    EXPECT_EQ(e2.code, 0);
    const auto doc = nlohmann::json::parse(e2.out);
    EXPECT_LE(doc["value_gap"].get<double>(), 1e-10);
    EXPECT_TRUE(doc["pass"].get<bool>());
    EXPECT_EQ(run("oracle " + fixture("e3_meanfield.json") + " --tree-csv " + path("tree.csv")).code, 0);
    EXPECT_EQ(slurp(path("tree.csv")).rfind("stage,node,probability,state_0,control_0\n", 0), 0u);
    EXPECT_EQ(run("oracle " + fixture("long_horizon.json")).code, 2);
    EXPECT_NE(slurp(path("stderr.txt")).find("8191"), std::string::npos);
}

TEST_F(CliTest, GenerateIsDeterministicAndValid) {
    EXPECT_EQ(run("generate --n 2 --r 2 --N 4 --seed 0 --meanfield --out " + path("g1.json")).code, 0);
    EXPECT_EQ(run("generate --n 2 --r 2 --N 4 --seed 0 --meanfield --out " + path("g2.json")).code, 0);
    EXPECT_EQ(slurp(path("g1.json")), slurp(path("g2.json")));
    EXPECT_EQ(run("validate " + path("g1.json")).code, 0);
    EXPECT_EQ(run("generate --n 1 --r 1 --N 1 --seed 7 --out " + path("g3.json")).code, 0);
    EXPECT_EQ(run("validate " + path("g3.json")).code, 0);
    EXPECT_EQ(run("generate --n 0 --r 1 --N 1").code, 2);
    EXPECT_EQ(run("generate --r 1 --N 1").code, 2);
}

TEST_F(CliTest, CertifyExitCodes) {
    EXPECT_EQ(run("certify " + fixture("e2_multiplicative.json")).code, 0);
    EXPECT_EQ(run("certify " + fixture("e3_meanfield.json") + " --verbose").code, 0);

    // Corrupted solution: gain zeroed.
    const auto spec = mfdlq::testing::load_fixture("e2_multiplicative.json");
    auto sol = mfdlq::solve_meanfield(spec);
    sol.K[0].setZero();
    sol.Kbar[0].setZero();
    mfdlq::io::write_file(path("bad_sol.json"), mfdlq::serialize_solution(sol, spec.x0));
    EXPECT_EQ(run("certify " + fixture("e2_multiplicative.json") + " --solution " +
                  path("bad_sol.json"))
                  .code,
              1);
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, QuietSuppressesDiagnostics) {
    EXPECT_EQ(run("--quiet solve " + fixture("e1_deterministic.json")).code, 0);
    EXPECT_TRUE(slurp(path("stderr.txt")).empty());
}
