#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace mfdlq;
using mfdlq::testing::load_fixture;

namespace {

const char* kScalar = R"({
  "n": 1, "r": 1, "N": 1, "x0": [1],
  "noise": {"kind": "rademacher", "variance": 1},
  "terminal": {"Q": [[1]]},
  "stage": {"A": [[1]], "Abar": [[1]], "B": [[1]], "C": [[1]], "Cbar": [[1]], "D": [[1]],
            "Q": [[1]], "R": [[1]]}
})";

ProblemSpec scalar_spec(double q, double qbar, double r, double rbar) {
    ProblemSpec spec = generate_random(1, 1, 1, 0, false);
    spec.stages[0].Q(0, 0) = q;
    spec.stages[0].Qbar(0, 0) = qbar;
    spec.stages[0].R(0, 0) = r;
    spec.stages[0].Rbar(0, 0) = rbar;
    return spec;
}

bool mentions(const ValidationReport& rep, const std::string& text) {
    for (const auto& v : rep.violations)
        if (v.description.find(text) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(LoadProblem, MinimalScalarInstance) {
    const auto spec = load_problem(kScalar);
    EXPECT_EQ(spec.n, 1u);
    EXPECT_EQ(spec.r, 1u);
    EXPECT_EQ(spec.N, 1u);
    ASSERT_EQ(spec.stages.size(), 1u);
    const auto& s = spec.stages[0];
    for (const Matrix* m : {&s.A, &s.Abar, &s.B, &s.C, &s.Cbar, &s.D, &s.Q, &s.R})
        EXPECT_EQ((*m)(0, 0), 1.0);
    EXPECT_EQ(spec.noise.kind, NoiseKind::Rademacher);
    EXPECT_EQ(spec.noise.variance, 1.0);
    EXPECT_EQ(spec.x0(0), 1.0);
}

TEST(LoadProblem, DimensionMismatchNamesField) {
    try {
        load_fixture("bad_shape.json");
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        EXPECT_EQ(e.field(), "B");
        EXPECT_NE(std::string(e.what()).find("expected 2x1"), std::string::npos) << e.what();
    }
}

TEST(LoadProblem, OmittedOptionalMatricesAreZero) {
    const auto spec = load_fixture("e1_deterministic.json");
    EXPECT_TRUE(spec.stages[0].Qbar.isZero(0.0));
    EXPECT_TRUE(spec.stages[0].Rbar.isZero(0.0));
    EXPECT_TRUE(spec.stages[0].C.isZero(0.0));
    EXPECT_TRUE(spec.terminalQbar.isZero(0.0));
    EXPECT_TRUE(spec.barred_free());
}

TEST(LoadProblem, StageShorthandRepeatsForHorizon) {
    const auto spec = load_fixture("long_horizon.json");
    ASSERT_EQ(spec.stages.size(), 13u);
    for (const auto& s : spec.stages) EXPECT_TRUE(s == spec.stages.front());
}

TEST(LoadProblem, WeightsAreSymmetrized) {
    const auto spec = load_problem(R"({
      "n": 2, "r": 1, "N": 1, "x0": [0, 0],
      "noise": {"kind": "gaussian"},
      "terminal": {"Q": [[1, 0.2], [0, 1]]},
      "stage": {"A": [[1, 0], [0, 1]], "B": [[1], [0]], "Q": [[2, 1], [0, 2]], "R": [[1]]}
    })");
    EXPECT_EQ(spec.stages[0].Q(0, 1), 0.5);
    EXPECT_EQ(spec.stages[0].Q(1, 0), 0.5);
    EXPECT_EQ(spec.terminalQ(0, 1), 0.1);
    EXPECT_EQ(spec.noise.variance, 1.0);
}

TEST(LoadProblem, ErrorPaths) {
    EXPECT_THROW(load_problem("{ not json"), ParseError);
    EXPECT_THROW(load_problem(R"({"r": 1, "N": 1})"), MissingFieldError);
    // stage missing required R
    EXPECT_THROW(load_problem(R"({"n": 1, "r": 1, "N": 1, "x0": [1],
        "noise": {"kind": "gaussian"}, "terminal": {"Q": [[1]]},
        "stage": {"A": [[1]], "B": [[1]], "Q": [[1]]}})"),
                 MissingFieldError);
    // wrong number of stages
    EXPECT_THROW(load_problem(R"({"n": 1, "r": 1, "N": 2, "x0": [1],
        "noise": {"kind": "gaussian"}, "terminal": {"Q": [[1]]},
        "stages": [{"A": [[1]], "B": [[1]], "Q": [[1]], "R": [[1]]}]})"),
                 DimensionError);
    // unknown noise kind
    EXPECT_THROW(load_problem(R"({"n": 1, "r": 1, "N": 1, "x0": [1],
        "noise": {"kind": "cauchy"}, "terminal": {"Q": [[1]]},
        "stage": {"A": [[1]], "B": [[1]], "Q": [[1]], "R": [[1]]}})"),
                 ParseError);
    // ragged matrix
    EXPECT_THROW(load_problem(R"({"n": 2, "r": 1, "N": 1, "x0": [1, 1],
        "noise": {"kind": "gaussian"}, "terminal": {"Q": [[1, 0], [0]]},
        "stage": {"A": [[1, 0], [0, 1]], "B": [[1], [1]], "Q": [[1, 0], [0, 1]], "R": [[1]]}})"),
                 ParseError);
}

TEST(Validate, PositiveScalarsPass) { EXPECT_TRUE(validate(scalar_spec(1, 0, 1, 0)).ok()); }

TEST(Validate, ZeroControlWeightFails) {
    const auto rep = validate(load_fixture("r_zero.json"));
    EXPECT_FALSE(rep.ok());
    EXPECT_TRUE(mentions(rep, "R_0 not positive definite"));
}

TEST(Validate, IndefiniteStateWeightReportsEigenvalue) {
    ProblemSpec spec = generate_random(2, 1, 1, 3, false);
    spec.stages[0].Q << 1.0, 0.0, 0.0, -0.5;
    const auto rep = validate(spec);
    ASSERT_FALSE(rep.ok());
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.location == "Q_0") {
            found = true;
            EXPECT_NEAR(v.value, -0.5, 1e-15);
        }
    EXPECT_TRUE(found);
}

TEST(Validate, MeanFieldConditionsCheckedOnSums) {
    // Q + Qbar = -0.25 < 0 while Q >= 0
    EXPECT_TRUE(mentions(validate(scalar_spec(1, -1.25, 1, 0)), "Q_0+Qbar_0 not positive semidefinite"));
    // R + Rbar = 0 while R > 0
    EXPECT_TRUE(mentions(validate(scalar_spec(1, 0, 1, -1)), "R_0+Rbar_0 not positive definite"));
    // Qbar itself may be negative as long as the sum is PSD
    EXPECT_TRUE(validate(scalar_spec(1, -1, 1, -0.5)).ok());
}

TEST(Validate, TerminalWeights) {
    ProblemSpec spec = generate_random(1, 1, 2, 4, true);
    spec.terminalQ(0, 0) = -1e-3;
    EXPECT_FALSE(validate(spec).ok());
    spec.terminalQ(0, 0) = 1.0;
    spec.terminalQbar(0, 0) = -2.0;
    EXPECT_FALSE(validate(spec).ok());
}

TEST(Validate, ToleranceBoundaries) {
    // PSD tolerance -1e-10, PD tolerance 1e-12
    EXPECT_TRUE(validate(scalar_spec(-5e-11, 0, 1, 0)).ok());
    EXPECT_FALSE(validate(scalar_spec(-2e-10, 0, 1, 0)).ok());
    EXPECT_TRUE(validate(scalar_spec(1, 0, 2e-12, 0)).ok());
    EXPECT_FALSE(validate(scalar_spec(1, 0, 5e-13, 0)).ok());
}

TEST(Validate, StructuralProblemsAreReported) {
    ProblemSpec spec = generate_random(2, 1, 2, 0, false);
    spec.stages[1].B = Matrix::Ones(2, 2);
    spec.stages[0].R(0, 0) = std::nan("");
    spec.x0 = Vector::Zero(3);
    const auto rep = validate(spec);
    EXPECT_FALSE(rep.ok());
    EXPECT_GE(rep.violations.size(), 3u);
}

TEST(GenerateRandom, SatisfiesWeightConditions) {
    EXPECT_TRUE(validate(generate_random(1, 1, 1, 7, false)).ok());
    EXPECT_TRUE(validate(generate_random(2, 2, 4, 0, true)).ok());
}

TEST(GenerateRandom, PropertyAllSeedsAndSizesValidate) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto sz = mfdlq::testing::sizes_for(seed, 4, 3, 5);
        const bool mf = seed % 2 == 1;
        const auto spec = generate_random(sz.n, sz.r, sz.N, seed, mf);
        ASSERT_TRUE(validate(spec).ok()) << "seed " << seed;
        EXPECT_EQ(spec.barred_free(), !mf);
    }
}

TEST(GenerateRandom, DeterministicAndByteStable) {
    const auto a = generate_random(2, 2, 4, 0, true);
    const auto b = generate_random(2, 2, 4, 0, true);
    EXPECT_TRUE(a == b);
    EXPECT_EQ(serialize_problem(a), serialize_problem(b));
    EXPECT_FALSE(a == generate_random(2, 2, 4, 1, true));
    EXPECT_THROW(generate_random(0, 1, 1, 0, false), DimensionError);
}

TEST(ProblemIo, RoundTripIsIdentity) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto sz = mfdlq::testing::sizes_for(seed, 3, 2, 4);
        NoiseModel noise{seed % 3 == 0 ? NoiseKind::Gaussian : NoiseKind::Rademacher,
                         0.1 + 0.37 * static_cast<double>(seed)};
        const auto spec = generate_random(sz.n, sz.r, sz.N, seed, seed % 2 == 0, noise);
        const std::string text = serialize_problem(spec);
        const auto back = load_problem(text);
        ASSERT_TRUE(back == spec) << "seed " << seed;
        EXPECT_EQ(serialize_problem(back), text);
    }
}

TEST(JsonWriter, SeventeenSignificantDigits) {
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_double(1.5), "1.5");
    EXPECT_EQ(io::format_double(-2.0), "-2");
    io::ordered_json doc;
    doc["b"] = 1.0 / 3.0;
    doc["a"] = io::ordered_json::array({1.0, 2.5});
    EXPECT_EQ(io::dump(doc), "{\n  \"b\": 0.33333333333333331,\n  \"a\": [1, 2.5]\n}\n");
}
