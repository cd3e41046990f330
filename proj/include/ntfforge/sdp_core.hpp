#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ntfforge::sdp {

/// Entry (row, col) with row <= col of a symmetric matrix; the mirrored
/// entry is implied.
struct SparseEntry {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

struct SymSparse {
    std::vector<SparseEntry> entries;

    void add(int row, int col, double value);
    [[nodiscard]] Eigen::MatrixXd dense(int n) const;
    /// Trace inner product with a symmetric dense matrix.
    [[nodiscard]] double dot(const Eigen::MatrixXd& x) const;
    /// out += scale * this.
    void accumulate(Eigen::MatrixXd& out, double scale) const;
    [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
};

/// One variable's coefficient matrix inside one block.
struct Term {
    int var = 0;
    SymSparse mat;
};

/// Block SDP in dual form:
///   maximize b.y  subject to  Z_k = C_k - sum_i y_i A_ik  PSD for every block k,
/// paired with the primal
///   minimize sum_k <C_k, X_k>  subject to  sum_k <A_ik, X_k> = b_i,  X_k PSD.
struct BlockSdp {
    std::vector<Eigen::MatrixXd> c;
    /// terms[k] lists the nonzero A_ik of block k, at most one per variable.
    std::vector<std::vector<Term>> terms;
    Eigen::VectorXd b;

    [[nodiscard]] int variable_count() const noexcept { return static_cast<int>(b.size()); }
    [[nodiscard]] int block_count() const noexcept { return static_cast<int>(c.size()); }
    /// Throws Error(InvalidSpec) on inconsistent sizes or out-of-range entries.
    void validate() const;
};

struct SolverSettings {
    double gap_tol = 1e-7;
    double feas_tol = 1e-8;
    int max_iter = 200;

    void validate() const;
    friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

enum class SolveStatus { Optimal, MaxIterations, Infeasible, NumericalFailure };

[[nodiscard]] const char* to_string(SolveStatus status) noexcept;

struct IterationInfo {
    int iteration = 0;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double rel_gap = 0.0;
    double primal_infeas = 0.0;
    double dual_infeas = 0.0;
    double mu = 0.0;
    double step_primal = 0.0;
    double step_dual = 0.0;
};

struct BlockSdpResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd y;
    std::vector<Eigen::MatrixXd> x;
    std::vector<Eigen::MatrixXd> z;
    int iterations = 0;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double rel_gap = 0.0;
    double primal_infeas = 0.0;
    double dual_infeas = 0.0;
    std::string message;
    std::vector<IterationInfo> history;
};

/// Infeasible primal-dual path following with Nesterov-Todd scaling and a
/// Mehrotra predictor-corrector. Deterministic: fixed start, no randomness.
[[nodiscard]] BlockSdpResult solve_block_sdp(const BlockSdp& problem, const SolverSettings& settings);

} // namespace ntfforge::sdp
