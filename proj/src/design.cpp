#include "ntfforge/design.hpp"
#include "ntfforge/error.hpp"

#include <cmath>

namespace ntfforge {

void EvaluationSettings::validate(double fs_hz) const {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
        throw Error(ErrorKind::InvalidSpec, "evaluation amplitude must be positive");
    }
    if (length == 0) {
        throw Error(ErrorKind::InvalidSpec, "evaluation length must be positive");
    }
    if (signal != modsim::SignalKind::Dc) {
        if (freqs_hz.empty() || (signal == modsim::SignalKind::Sine && freqs_hz.size() != 1)) {
            throw Error(ErrorKind::InvalidSpec, "sine needs one frequency, multitone at least one");
        }
        for (double f : freqs_hz) {
            if (!(f > 0.0) || f >= fs_hz / 2.0) {
                throw Error(ErrorKind::InvalidSpec, "test tone must lie in (0, fs/2)");
            }
        }
    }
}

void DesignSpec::validate() const {
    filter.validate();
    if (fir_order < 1 || fir_order > kMaxFirOrder) {
        throw Error(ErrorKind::InvalidSpec, "fir_order must lie in [1, 64]");
    }
    if (!(gamma > 1.0) || !std::isfinite(gamma)) {
        throw Error(ErrorKind::InvalidSpec, "gamma must exceed 1");
    }
    quantizer.validate();
    solver.validate();
    if (grid_points < 2) {
        throw Error(ErrorKind::InvalidSpec, "grid_points must be at least 2");
    }
    evaluation.validate(filter.sample_rate_hz);
}

bool NtfArtifact::is_fir() const {
    if (den.empty() || den[0] == 0.0) {
        return false;
    }
    for (std::size_t k = 1; k < den.size(); ++k) {
        if (den[k] != 0.0) {
            return false;
        }
    }
    return den[0] == 1.0;
}

NtfFir NtfArtifact::fir() const {
    if (!is_fir()) {
        throw Error(ErrorKind::InvalidSpec, "NTF is rational, not FIR");
    }
    return NtfFir(num);
}

void NtfArtifact::validate() const {
    if (num.empty() || den.empty()) {
        throw Error(ErrorKind::InvalidSpec, "NTF needs numerator and denominator coefficients");
    }
    for (double v : num) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidSpec, "non-finite NTF numerator coefficient");
        }
    }
    for (double v : den) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidSpec, "non-finite NTF denominator coefficient");
        }
    }
    if (den[0] == 0.0 || num[0] != den[0]) {
        throw Error(ErrorKind::CausalityViolation, "NTF must start with num[0] == den[0] != 0");
    }
}

} // namespace ntfforge
