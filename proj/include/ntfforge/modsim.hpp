#pragma once

#include "ntfforge/dsp.hpp"
#include "ntfforge/ntf.hpp"

#include <span>
#include <string>
#include <vector>

namespace ntfforge::modsim {

inline constexpr std::size_t kDefaultLength = std::size_t{1} << 16;
/// Finite stand-in for an infinite SNR when the noise power is exactly zero.
inline constexpr double kSnrCapDb = 300.0;
/// |y(n)| beyond this stops the loop; the modulator has gone unstable.
inline constexpr double kDivergenceLimit = 1e6;

struct Quantizer {
    std::vector<double> levels{-1.0, 1.0};

    void validate() const;
    /// Uniform step between adjacent levels (the first gap for non-uniform sets).
    [[nodiscard]] double delta() const;
    /// Nearest level; midpoints go to the higher level.
    [[nodiscard]] double quantize(double y) const;
};

enum class StfChoice { Unity, Delay };

struct LoopFilters {
    dsp::TransferFunction ff;
    dsp::TransferFunction fb;
};

/// FF = STF / NTF and FB = (1 - NTF) / STF. Throws CausalityViolation when
/// a0 != 1 or when FF FB would not be strictly causal.
[[nodiscard]] LoopFilters loop_filters_from_ntf(std::span<const double> ntf_coeffs, StfChoice stf, int delay = 1);
[[nodiscard]] LoopFilters loop_filters_from_ntf(const NtfFir& ntf, StfChoice stf, int delay = 1);

struct ModTrace {
    std::vector<double> input_w;
    std::vector<double> output_x;
    std::vector<double> quant_error_e;
    bool overloaded = false;
    /// The loop state blew up and the run stopped early (output_x shorter than the input).
    bool diverged = false;
    std::size_t transient_discard = 0;
    double max_abs_error = 0.0;
};

/// Error-feedback loop y(n) = w(n) + sum_{k>=1} a_k e(n-k), x(n) = Q(y(n)),
/// e(n) = x(n) - y(n), so that x = w + NTF * e exactly.
[[nodiscard]] ModTrace simulate(const NtfFir& ntf, std::span<const double> input_w, const Quantizer& quantizer,
                                std::size_t n_discard);

/// Same loop for a rational NTF num/den (num[0] == den[0]): y = w + (NTF - 1) e,
/// with NTF - 1 strictly causal.
[[nodiscard]] ModTrace simulate(std::span<const double> ntf_num, std::span<const double> ntf_den,
                                std::span<const double> input_w, const Quantizer& quantizer, std::size_t n_discard);

enum class SnrMethod { Expected, Simulated };

struct SnrReport {
    double signal_power = 0.0;
    double noise_power = 0.0;
    double snr_db = 0.0;
    double amplitude = 0.0;
    SnrMethod method = SnrMethod::Expected;
    /// noise_power == 0; snr_db holds kSnrCapDb.
    bool capped = false;
    bool overloaded = false;
};

[[nodiscard]] std::string to_string(SnrMethod method);

/// Signal = H w, noise = H (w - x); both discard the longer of the trace
/// transient and the filter settling length.
[[nodiscard]] SnrReport measure_snr(const ModTrace& trace, const dsp::RationalFilter& filter);

/// A^2 / (2 sigma2_h).
[[nodiscard]] SnrReport expected_snr(double amplitude, double sigma2_h);

enum class SignalKind { Sine, Multitone, Dc };

[[nodiscard]] SignalKind signal_kind_from_string(const std::string& name);

/// Each tone is snapped to an integer number of cycles in n samples.
[[nodiscard]] std::vector<double> make_test_signal(SignalKind kind, std::span<const double> freqs_hz,
                                                   std::span<const double> amplitudes, double fs_hz, std::size_t n);

/// Frequency actually used for a tone after coherent snapping.
[[nodiscard]] double coherent_frequency(double f_hz, double fs_hz, std::size_t n);

/// Default transient: max(filter settling length, 4 P).
[[nodiscard]] std::size_t default_transient(const NtfFir& ntf, const dsp::RationalFilter& filter);

} // namespace ntfforge::modsim
