#pragma once

#include "mfdlq/adjoint.hpp"
#include "mfdlq/riccati.hpp"
#include "mfdlq/tree_oracle.hpp"

namespace mfdlq {

inline constexpr double kStationarityTol = 1e-9;

struct CertifyOutcome {
    ComparisonReport comparison;
    AdjointCertificate certificate;  // at the Riccati feedback controls
    bool pass = false;
};

/// Solution checked end to end on the exact tree: Riccati feedback controls must
/// satisfy stationarity to kStationarityTol and match the tree optimum.
inline CertifyOutcome certify(const ProblemSpec& spec, const RiccatiSolution& sol,
                              std::size_t max_decision_dim = kDefaultMaxDecisionDim) {
    const ScenarioTree tree = build_tree(spec, max_decision_dim);
    CertifyOutcome out;
    out.certificate = certify_controls(spec, tree, feedback_tree_controls(spec, sol, tree));
    out.comparison = compare(spec, sol, tree);
    out.pass = out.certificate.max_residual <= kStationarityTol && out.comparison.pass;
    return out;
}

}  // namespace mfdlq
