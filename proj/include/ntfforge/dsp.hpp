#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ntfforge::dsp {

using Complex = std::complex<double>;

inline constexpr double kDefaultEnergyTol = 1e-12;
inline constexpr std::size_t kDefaultTruncationCap = std::size_t{1} << 20;
inline constexpr std::size_t kDefaultGridPoints = 4096;
/// Poles closer than this to the unit circle are rejected as ill-conditioned.
inline constexpr double kPoleMargin = 1e-12;

/// Ratio of polynomials in z^-1, den[0] == 1. No stability requirement: loop
/// filters such as an accumulator are legitimately marginal.
struct TransferFunction {
    std::vector<double> num{1.0};
    std::vector<double> den{1.0};

    [[nodiscard]] Complex response(double omega) const;
};

/// One cascade stage, usually a biquad. den[0] == 1.
struct Section {
    std::vector<double> num;
    std::vector<double> den;
};

/// A gain times a cascade of sections.
struct Branch {
    double gain = 1.0;
    std::vector<Section> sections;
};

/// Stable discrete-time filter stored as a parallel sum of cascades.
///
/// High-order band-pass designs are numerically hopeless in expanded
/// direct form (the denominator roots cluster near the unit circle), so the
/// filter keeps its factored structure for simulation and evaluation and only
/// expands to a single numerator/denominator pair on request.
class RationalFilter {
public:
    RationalFilter(std::vector<Branch> branches, double sample_rate_hz);

    /// Single direct-form section. Normalizes so that den[0] == 1.
    static RationalFilter from_coefficients(std::vector<double> num, std::vector<double> den,
                                            double sample_rate_hz = 1.0);
    static RationalFilter identity(double sample_rate_hz = 1.0);

    [[nodiscard]] const std::vector<Branch>& branches() const noexcept { return branches_; }
    [[nodiscard]] double sample_rate_hz() const noexcept { return sample_rate_hz_; }

    /// Common-denominator form, powers of z^-1.
    [[nodiscard]] std::vector<double> numerator_coeffs() const;
    [[nodiscard]] std::vector<double> denominator_coeffs() const;

    [[nodiscard]] std::vector<Complex> poles() const;
    [[nodiscard]] double max_pole_radius() const;
    [[nodiscard]] std::size_t denominator_order() const;
    [[nodiscard]] std::size_t numerator_order() const;
    [[nodiscard]] bool is_fir() const;

    [[nodiscard]] Complex response(double omega) const;

private:
    std::vector<Branch> branches_;
    double sample_rate_hz_;
};

/// Streaming evaluation of a RationalFilter (transposed direct form II per section).
class FilterRunner {
public:
    explicit FilterRunner(const RationalFilter& filter);

    double step(double input);
    void reset();

private:
    struct SectionState {
        const Section* section;
        std::vector<double> state;
    };
    struct BranchState {
        double gain;
        std::vector<SectionState> sections;
    };
    std::vector<BranchState> branches_;
};

[[nodiscard]] std::vector<double> apply(const RationalFilter& filter, std::span<const double> input);

enum class FilterKind {
    LowpassButterworth,
    BandpassButterworth,
    MultibandButterworth,
    ExplicitRational,
    ExplicitImpulse,
};

[[nodiscard]] std::string to_string(FilterKind kind);
[[nodiscard]] FilterKind filter_kind_from_string(const std::string& name);

struct Band {
    double low_hz = 0.0;
    double high_hz = 0.0;

    friend bool operator==(const Band&, const Band&) = default;
};

/// Output-filter description. `order` is the total order of the designed
/// filter (number of poles); a multiband filter splits it evenly across bands.
struct FilterSpec {
    FilterKind kind = FilterKind::LowpassButterworth;
    int order = 1;
    std::vector<Band> bands_hz;
    double sample_rate_hz = 1.0;
    std::vector<double> num;     // explicit_rational
    std::vector<double> den;     // explicit_rational
    std::vector<double> impulse; // explicit_impulse

    /// Throws Error(InvalidSpec) when an invariant is broken.
    void validate() const;
    [[nodiscard]] int order_per_band() const;

    friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

struct ImpulseResponse {
    std::vector<double> samples;
    double tail_energy_fraction = 0.0;
    double energy = 0.0;
    std::optional<FilterSpec> source;

    /// Index M of the last retained sample.
    [[nodiscard]] std::size_t last_index() const noexcept { return samples.size() - 1; }
};

struct FrequencyGrid {
    std::vector<double> omegas;

    /// `count` points uniformly spaced on [0, pi], both endpoints included.
    static FrequencyGrid uniform(std::size_t count = kDefaultGridPoints);
    [[nodiscard]] std::size_t count() const noexcept { return omegas.size(); }
};

[[nodiscard]] RationalFilter design_filter(const FilterSpec& spec);

[[nodiscard]] ImpulseResponse impulse_response(const RationalFilter& filter,
                                               double energy_tol = kDefaultEnergyTol,
                                               std::size_t hard_cap = kDefaultTruncationCap);
[[nodiscard]] ImpulseResponse impulse_response(const FilterSpec& spec,
                                               double energy_tol = kDefaultEnergyTol,
                                               std::size_t hard_cap = kDefaultTruncationCap);

/// Number of samples after which the response tail holds at most `energy_tol`
/// of the energy.
[[nodiscard]] std::size_t settling_length(const RationalFilter& filter, double energy_tol = 1e-9);

[[nodiscard]] std::vector<Complex> frequency_response(std::span<const double> num,
                                                      std::span<const double> den,
                                                      const FrequencyGrid& grid);
[[nodiscard]] std::vector<Complex> frequency_response(const RationalFilter& filter,
                                                      const FrequencyGrid& grid);

/// Roots of c[0] x^n + c[1] x^(n-1) + ... + c[n]; the same coefficient vector
/// read as a polynomial in z^-1 has these roots as its z-plane zeros.
[[nodiscard]] std::vector<Complex> polynomial_roots(std::span<const double> coeffs);

/// Monic real polynomial with the given roots (imaginary residue dropped).
[[nodiscard]] std::vector<double> polynomial_from_roots(std::span<const Complex> roots);

[[nodiscard]] std::vector<double> poly_multiply(std::span<const double> a, std::span<const double> b);
[[nodiscard]] std::vector<double> poly_add(std::span<const double> a, std::span<const double> b);

/// sum_k c[k] * x^k, evaluated by Horner.
[[nodiscard]] Complex poly_eval_ascending(std::span<const double> coeffs, Complex x);

} // namespace ntfforge::dsp
