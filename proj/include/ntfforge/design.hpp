#pragma once

#include "ntfforge/dsp.hpp"
#include "ntfforge/kyp.hpp"
#include "ntfforge/modsim.hpp"
#include "ntfforge/ntf.hpp"
#include "ntfforge/sdp_core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ntfforge {

inline constexpr int kMaxFirOrder = 64;

/// Test-signal settings used by evaluate.
struct EvaluationSettings {
    modsim::SignalKind signal = modsim::SignalKind::Sine;
    std::vector<double> freqs_hz{1000.0};
    /// Per-tone amplitude.
    double amplitude = 0.4;
    std::size_t length = modsim::kDefaultLength;

    void validate(double fs_hz) const;
};

struct DesignSpec {
    std::string name;
    dsp::FilterSpec filter;
    int fir_order = 12;
    double gamma = kyp::kDefaultGamma;
    modsim::Quantizer quantizer;
    sdp::SolverSettings solver;
    std::size_t grid_points = dsp::kDefaultGridPoints;
    EvaluationSettings evaluation;

    [[nodiscard]] double sample_rate_hz() const noexcept { return filter.sample_rate_hz; }
    /// Throws Error(InvalidSpec) when any invariant fails.
    void validate() const;
};

/// A designed (FIR) or externally supplied (rational) NTF.
struct NtfArtifact {
    std::vector<double> num;
    std::vector<double> den{1.0};
    std::optional<double> gamma;
    std::optional<double> sigma2_h;
    std::optional<kyp::BoundedRealCertificate> certificate;
    std::optional<std::string> solver_status;
    std::optional<int> solver_iterations;
    std::optional<double> duality_gap;

    [[nodiscard]] bool is_fir() const;
    /// Throws CausalityViolation / InvalidSpec when not a valid FIR NTF.
    [[nodiscard]] NtfFir fir() const;
    void validate() const;
};

} // namespace ntfforge
