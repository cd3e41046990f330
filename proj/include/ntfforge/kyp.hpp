#pragma once

#include "ntfforge/ntf.hpp"
#include "ntfforge/sdp_core.hpp"

#include <Eigen/Dense>

#include <optional>
#include <utility>

namespace ntfforge::kyp {

inline constexpr double kDefaultGamma = 1.5;
inline constexpr std::size_t kLeeGridPoints = 8192;
/// Largest eigenvalue of the big matrix accepted as "negative semidefinite".
inline constexpr double kLmiTol = 1e-7;
/// Relative slack on the frequency-grid gain check.
inline constexpr double kGridSlack = 1e-4;

/// x(n+1) = A x(n) + B u(n), y(n) = C x(n) + D u(n).
struct CanonicalRealization {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::RowVectorXd c;
    double d = 1.0;

    [[nodiscard]] int order() const noexcept { return static_cast<int>(a.rows()); }
    [[nodiscard]] dsp::Complex transfer(double omega) const;
    [[nodiscard]] bool controllable(double tol = 1e-9) const;
};

/// Shift-register realization: each state is a delayed copy of the next.
[[nodiscard]] CanonicalRealization canonical_realization(const NtfFir& ntf);

/// Number of independent entries of a p x p symmetric matrix.
[[nodiscard]] constexpr int sym_count(int p) noexcept { return p * (p + 1) / 2; }
/// Position of (i, j) in the row-major upper-triangle vectorization.
[[nodiscard]] int sym_index(int p, int i, int j) noexcept;
[[nodiscard]] Eigen::MatrixXd sym_unvec(const Eigen::VectorXd& v, int p);
[[nodiscard]] Eigen::VectorXd sym_vec(const Eigen::MatrixXd& m);

/// M(xi) = M0 + sum xi_i M_i, the (P+2) x (P+2) bounded-real matrix
///   [ A'PA - P   A'PB        C' ]
///   [ B'PA       B'PB - g^2  D  ]
///   [ C          D          -1  ]
/// with xi = (a1..aP, vec(P)).
class LmiSystem {
public:
    LmiSystem(int order_p, double gamma);

    [[nodiscard]] int order() const noexcept { return order_p_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] int dimension() const noexcept { return order_p_ + 2; }
    [[nodiscard]] int variable_count() const noexcept { return order_p_ + sym_count(order_p_); }

    /// Index 0 is M0, index i >= 1 multiplies xi_i (1-based).
    [[nodiscard]] const sdp::SymSparse& basis(int index) const { return basis_.at(static_cast<std::size_t>(index)); }
    [[nodiscard]] Eigen::MatrixXd basis_dense(int index) const { return basis(index).dense(dimension()); }

    [[nodiscard]] Eigen::MatrixXd evaluate(const Eigen::VectorXd& xi) const;
    [[nodiscard]] Eigen::MatrixXd evaluate(const NtfFir& ntf, const Eigen::MatrixXd& p_matrix) const;
    [[nodiscard]] Eigen::VectorXd pack(const NtfFir& ntf, const Eigen::MatrixXd& p_matrix) const;

private:
    int order_p_;
    double gamma_;
    std::vector<sdp::SymSparse> basis_;
};

[[nodiscard]] LmiSystem assemble_lmi(int order_p, double gamma);

/// Dense-grid maximum of |NTF| over [0, pi].
[[nodiscard]] double grid_max_gain(const NtfFir& ntf, std::size_t points = kLeeGridPoints);
/// Grid maximum refined by golden-section search around the best grid points.
[[nodiscard]] double peak_gain(const NtfFir& ntf, std::size_t points = kLeeGridPoints);

struct BoundedRealCertificate {
    Eigen::MatrixXd p_matrix;
    double gamma = kDefaultGamma;
    double max_eig_big = 0.0;
    double min_eig_p = 0.0;
    double grid_max = 0.0;

    /// Eigenvalue tolerances met: big matrix NSD, P PSD within -1e-9 trace.
    [[nodiscard]] bool lmi_satisfied(double tol = kLmiTol) const;
    /// Grid gain within gamma (1 + slack).
    [[nodiscard]] bool grid_satisfied(double slack = kGridSlack) const;
};

/// Recomputes the eigenvalue extremes for a given certificate.
[[nodiscard]] BoundedRealCertificate evaluate_certificate(const NtfFir& ntf, double gamma,
                                                          const Eigen::MatrixXd& p_matrix);

struct FeasibilityResult {
    /// min t with M(a, P) <= t I, P >= 0.
    double t = 0.0;
    Eigen::MatrixXd p_matrix;
    sdp::SolveStatus status = sdp::SolveStatus::NumericalFailure;
    int iterations = 0;
};

/// Solves the LMI feasibility problem for a fixed NTF.
[[nodiscard]] FeasibilityResult find_certificate(const NtfFir& ntf, double gamma,
                                                 const sdp::SolverSettings& settings = {});

/// Accepts or rejects `certificate`, or searches for one when absent.
/// Throws Error(BoundViolation) with the grid maximum when the bound fails
/// either the LMI test or the frequency-grid cross-check.
[[nodiscard]] BoundedRealCertificate verify_bounded_real(const NtfFir& ntf, double gamma,
                                                         const std::optional<Eigen::MatrixXd>& certificate = {},
                                                         const sdp::SolverSettings& settings = {});

/// (big matrix NSD, Schur-reduced matrix NSD) for an arbitrary realization.
[[nodiscard]] std::pair<bool, bool> schur_equivalence_check(const CanonicalRealization& r,
                                                            const Eigen::MatrixXd& p_matrix, double gamma,
                                                            double tol = 1e-10);

/// The full (P+2) bounded-real matrix for an arbitrary realization.
[[nodiscard]] Eigen::MatrixXd bounded_real_matrix(const CanonicalRealization& r, const Eigen::MatrixXd& p_matrix,
                                                  double gamma);
/// Its Schur complement with respect to the -1 corner, size P+1.
[[nodiscard]] Eigen::MatrixXd dissipation_matrix(const CanonicalRealization& r, const Eigen::MatrixXd& p_matrix,
                                                 double gamma);

} // namespace ntfforge::kyp
