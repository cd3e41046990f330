#pragma once

#include "ntfforge/kyp.hpp"
#include "ntfforge/ntf.hpp"
#include "ntfforge/objective.hpp"
#include "ntfforge/sdp_core.hpp"

#include <Eigen/Dense>

#include <string>

namespace ntfforge::sdp {

/// minimize constant + linear.x + x.quadratic.x over the first P entries of xi
/// subject to M(xi) NSD and the certificate block PSD.
struct SdpProblem {
    Eigen::MatrixXd quadratic;
    Eigen::VectorXd linear;
    double constant = 0.0;
    kyp::LmiSystem lmi;

    SdpProblem(const objective::ReducedObjective& objective, kyp::LmiSystem lmi);

    [[nodiscard]] int order() const noexcept { return lmi.order(); }
    [[nodiscard]] int variable_count() const noexcept { return lmi.variable_count(); }
    /// Throws Error(InvalidSpec) when sizes disagree or the quadratic is not PSD.
    void validate() const;
};

struct SdpSolution {
    /// a1..aP followed by vec(P).
    Eigen::VectorXd xi;
    double objective_value = 0.0;
    double duality_gap = 0.0;
    double primal_infeas = 0.0;
    double dual_infeas = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::NumericalFailure;
    std::string message;
    int order_p = 0;

    [[nodiscard]] Eigen::MatrixXd certificate() const;
};

/// Epigraph reformulation t >= ||R [1; x]||^2 with R^T R the rank-truncated
/// factor of the full objective matrix, handed to the block interior-point solver.
[[nodiscard]] BlockSdp to_block_sdp(const SdpProblem& problem, double* objective_scale = nullptr);

[[nodiscard]] SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings = {});

/// Throws Error(Extraction) unless the solution is optimal.
[[nodiscard]] NtfFir extract_ntf(const SdpSolution& solution, int order_p);

} // namespace ntfforge::sdp
