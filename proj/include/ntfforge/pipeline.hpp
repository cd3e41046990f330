#pragma once

#include "ntfforge/design.hpp"
#include "ntfforge/io.hpp"
#include "ntfforge/kyp.hpp"
#include "ntfforge/modsim.hpp"
#include "ntfforge/sdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ntfforge::pipeline {

struct DesignResult {
    NtfFir ntf = NtfFir::unit();
    double gamma = kyp::kDefaultGamma;
    /// (delta^2 / 12) aT Q a.
    double sigma2_h = 0.0;
    /// Same quantity by frequency-domain quadrature, as a cross-check.
    double sigma2_h_quadrature = 0.0;
    kyp::BoundedRealCertificate certificate;
    sdp::SdpSolution solution;
    std::size_t impulse_length = 0;
    double runtime_seconds = 0.0;

    [[nodiscard]] NtfArtifact artifact() const;
};

/// Filter, Q matrix, LMI, SDP, extraction and certificate check. Throws
/// Error(Solver) on a non-optimal solve and Error(BoundViolation) when the
/// result fails the gain check.
[[nodiscard]] DesignResult design(const DesignSpec& spec);

struct SweepRow {
    int order = 0;
    double sigma_h = 0.0;
    double runtime_seconds = 0.0;
    std::string status;
    std::string message;
};

/// One independent design per order, solved concurrently; failures are
/// recorded in the row and do not stop the sweep.
[[nodiscard]] std::vector<SweepRow> sweep(const DesignSpec& spec, const std::vector<int>& orders);
[[nodiscard]] io::CsvTable sweep_csv(const std::vector<SweepRow>& rows);

struct EvaluationReport {
    std::vector<double> ntf_num;
    std::vector<double> ntf_den;
    double gamma = kyp::kDefaultGamma;
    double sigma2_h = 0.0;
    double sigma2_h_quadrature = 0.0;
    std::optional<double> sigma2_h_closed_form;
    modsim::SnrReport expected;
    std::optional<modsim::SnrReport> simulated;
    bool overloaded = false;
    bool diverged = false;
    double max_abs_error = 0.0;
    double grid_max_ntf = 0.0;
    bool lee_pass = false;
    std::optional<kyp::BoundedRealCertificate> certificate;
    std::string certificate_status;
    std::vector<dsp::Complex> zeros;
    std::vector<double> integrand;
    dsp::FrequencyGrid grid;
    double runtime_seconds = 0.0;

    [[nodiscard]] bool pass() const { return lee_pass && !overloaded; }
    [[nodiscard]] io::json to_json() const;
};

struct EvaluateOptions {
    std::optional<double> amplitude;
    std::optional<modsim::SignalKind> signal;
    std::optional<double> gamma;
    /// Run the certificate search when the artifact carries none.
    bool certify = true;
};

[[nodiscard]] EvaluationReport evaluate(const NtfArtifact& ntf, const DesignSpec& spec,
                                        const EvaluateOptions& options = {});

/// Expected and simulated SNR for one FIR NTF and amplitude.
struct SnrPoint {
    modsim::SnrReport expected;
    std::optional<modsim::SnrReport> simulated;
    modsim::ModTrace trace;
};
[[nodiscard]] SnrPoint snr_at(const NtfFir& ntf, const DesignSpec& spec, double amplitude);

enum class CurveKind { Filter, Ntf, Integrand };
[[nodiscard]] CurveKind curve_kind_from_string(const std::string& name);

/// Filter and NTF magnitudes in dB, integrand linear; first column omega in rad/sample.
[[nodiscard]] io::CsvTable curve(CurveKind kind, const std::optional<DesignSpec>& spec,
                                 const std::optional<NtfArtifact>& ntf, std::size_t grid_points);

} // namespace ntfforge::pipeline
