#pragma once

#include "ntfforge/dsp.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace ntfforge::objective {

/// Quantizer noise model: white error of variance delta^2 / 12.
struct NoiseBudget {
    double delta = 2.0;

    [[nodiscard]] double sigma2_eps() const noexcept { return delta * delta / 12.0; }
    /// One-sided power density on [0, pi].
    [[nodiscard]] double pds_constant() const noexcept;
};

/// Toeplitz autocorrelation matrix of the output-filter impulse response.
struct QMatrix {
    Eigen::MatrixXd entries;
    std::vector<double> first_row;

    [[nodiscard]] int order() const noexcept { return static_cast<int>(first_row.size()) - 1; }
};

/// aT Q a with a0 = 1 rewritten as constant + linear.x + x.quadratic.x, x = a1..aP.
struct ReducedObjective {
    Eigen::MatrixXd quadratic;
    Eigen::VectorXd linear;
    double constant = 0.0;

    [[nodiscard]] double evaluate(const Eigen::VectorXd& x) const;
};

[[nodiscard]] QMatrix build_q_matrix(std::span<const double> h, int order_p);
[[nodiscard]] QMatrix build_q_matrix(const dsp::ImpulseResponse& h, int order_p);
[[nodiscard]] ReducedObjective reduce_objective(const QMatrix& q);

/// aT Q a for the full coefficient vector (a0 included).
[[nodiscard]] double quadratic_form(const QMatrix& q, std::span<const double> a);

/// Closed form of the filtered noise power for a FIR NTF: (delta^2/12) aT Q a.
[[nodiscard]] double sigma2_h_fir(const QMatrix& q, std::span<const double> a, const NoiseBudget& budget);

/// Composite trapezoid over the grid of `values` sampled at `grid.omegas`.
[[nodiscard]] double trapezoid(std::span<const double> values, const dsp::FrequencyGrid& grid);

/// |H|^2 |NTF|^2 per grid point.
[[nodiscard]] std::vector<double> merit_integrand(std::span<const double> ntf_num, std::span<const double> ntf_den,
                                                  const dsp::RationalFilter& filter,
                                                  const dsp::FrequencyGrid& grid);

/// Filtered noise power by quadrature. Re-evaluates on a doubled grid and logs a
/// warning when the two disagree by more than 0.1%.
[[nodiscard]] double sigma2_h(std::span<const double> ntf_num, std::span<const double> ntf_den,
                              const dsp::RationalFilter& filter, const NoiseBudget& budget,
                              const dsp::FrequencyGrid& grid);

struct QuadratureCheck {
    double value = 0.0;
    double refined = 0.0;
    [[nodiscard]] double relative_change() const;
    [[nodiscard]] bool converged() const { return relative_change() < 1e-3; }
};

/// sigma2_h on `grid` and on a uniform grid with twice the intervals.
[[nodiscard]] QuadratureCheck sigma2_h_checked(std::span<const double> ntf_num, std::span<const double> ntf_den,
                                               const dsp::RationalFilter& filter, const NoiseBudget& budget,
                                               const dsp::FrequencyGrid& grid);

/// Same integral with an arbitrary nonnegative weight sampled on the grid in place of |H|^2.
[[nodiscard]] double sigma2_weighted(std::span<const double> ntf_num, std::span<const double> ntf_den,
                                     std::span<const double> weight, const NoiseBudget& budget,
                                     const dsp::FrequencyGrid& grid);

using OmegaBand = std::pair<double, double>;

/// Noise power of |NTF|^2 restricted to the given radian bands (composite Simpson per band).
[[nodiscard]] double sigma2_inband(std::span<const double> ntf_num, std::span<const double> ntf_den,
                                   const std::vector<OmegaBand>& bands, const NoiseBudget& budget,
                                   std::size_t points_per_band = 4097);

} // namespace ntfforge::objective
