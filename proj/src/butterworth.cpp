#include "ntfforge/dsp.hpp"
#include "ntfforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ntfforge::dsp {

namespace {

using std::numbers::pi;

// Analog Butterworth prototype poles (unit cutoff, left half plane).
std::vector<Complex> prototype_poles(int n) {
    std::vector<Complex> poles;
    for (int k = 0; k < n; ++k) {
        const double theta = pi * (2.0 * k + n + 1) / (2.0 * n);
        poles.push_back(std::polar(1.0, theta));
    }
    return poles;
}

// Bilinear map with the s = (1 - z^-1) / (1 + z^-1) convention, so an analog
// frequency W corresponds to the digital frequency 2 atan(W).
Complex bilinear(Complex s) { return (1.0 + s) / (1.0 - s); }

double prewarp(double f_hz, double fs_hz) { return std::tan(pi * f_hz / fs_hz); }

// Groups digital poles into real first- and second-order denominators.
std::vector<std::vector<double>> pair_poles(std::vector<Complex> poles) {
    constexpr double imag_tol = 1e-10;
    std::vector<std::vector<double>> dens;
    std::vector<double> reals;
    for (const Complex& p : poles) {
        if (std::abs(p.imag()) <= imag_tol * std::max(1.0, std::abs(p))) {
            reals.push_back(p.real());
        } else if (p.imag() > 0.0) {
            dens.push_back({1.0, -2.0 * p.real(), std::norm(p)});
        }
    }
    std::sort(reals.begin(), reals.end());
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
        dens.push_back({1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
    }
    if (reals.size() % 2 == 1) {
        dens.push_back({1.0, -reals.back()});
    }
    return dens;
}

// Scales the section numerator so |H(e^{i w})| == 1 at w.
void normalize_at(Section& s, double omega) {
    const Complex zi = std::polar(1.0, -omega);
    const double mag = std::abs(poly_eval_ascending(s.num, zi) / poly_eval_ascending(s.den, zi));
    if (!(mag > 0.0) || !std::isfinite(mag)) {
        throw Error(ErrorKind::Conditioning, "filter section has no gain at its normalization frequency");
    }
    for (double& v : s.num) {
        v /= mag;
    }
}

Branch lowpass_branch(int order, double cutoff_hz, double fs_hz) {
    const double wc = prewarp(cutoff_hz, fs_hz);
    std::vector<Complex> zpoles;
    for (const Complex& p : prototype_poles(order)) {
        zpoles.push_back(bilinear(wc * p));
    }
    Branch branch;
    for (auto& den : pair_poles(zpoles)) {
        Section s;
        s.num = den.size() == 3 ? std::vector<double>{1.0, 2.0, 1.0} : std::vector<double>{1.0, 1.0};
        s.den = std::move(den);
        normalize_at(s, 0.0);
        branch.sections.push_back(std::move(s));
    }
    return branch;
}

Branch bandpass_branch(int order, const Band& band, double fs_hz) {
    const double w1 = prewarp(band.low_hz, fs_hz);
    const double w2 = prewarp(band.high_hz, fs_hz);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;
    const double center = 2.0 * std::atan(std::sqrt(w0sq));

    // Low-pass to band-pass: each prototype pole p yields the two roots of
    // s^2 - p bw s + w0^2 = 0.
    std::vector<Complex> zpoles;
    for (const Complex& p : prototype_poles(order / 2)) {
        const Complex b = p * bw;
        const Complex disc = std::sqrt(b * b - 4.0 * w0sq);
        zpoles.push_back(bilinear((b + disc) / 2.0));
        zpoles.push_back(bilinear((b - disc) / 2.0));
    }
    auto dens = pair_poles(zpoles);
    if (dens.size() * 2 != static_cast<std::size_t>(order)) {
        throw Error(ErrorKind::Conditioning, "band-pass poles do not pair into second-order sections");
    }
    Branch branch;
    for (auto& den : dens) {
        Section s{{1.0, 0.0, -1.0}, std::move(den)};
        normalize_at(s, center);
        branch.sections.push_back(std::move(s));
    }
    return branch;
}

Branch band_branch(int order, const Band& band, double fs_hz) {
    return band.low_hz == 0.0 ? lowpass_branch(order, band.high_hz, fs_hz) : bandpass_branch(order, band, fs_hz);
}

} // namespace

RationalFilter design_filter(const FilterSpec& spec) {
    spec.validate();
    switch (spec.kind) {
    case FilterKind::ExplicitRational:
        return RationalFilter::from_coefficients(spec.num, spec.den, spec.sample_rate_hz);
    case FilterKind::ExplicitImpulse:
        return RationalFilter::from_coefficients(spec.impulse, {1.0}, spec.sample_rate_hz);
    case FilterKind::LowpassButterworth:
        return RationalFilter({lowpass_branch(spec.order, spec.bands_hz[0].high_hz, spec.sample_rate_hz)},
                              spec.sample_rate_hz);
    case FilterKind::BandpassButterworth:
        return RationalFilter({bandpass_branch(spec.order, spec.bands_hz[0], spec.sample_rate_hz)},
                              spec.sample_rate_hz);
    case FilterKind::MultibandButterworth: {
        std::vector<Branch> branches;
        for (const Band& band : spec.bands_hz) {
            branches.push_back(band_branch(spec.order_per_band(), band, spec.sample_rate_hz));
        }
        return RationalFilter(std::move(branches), spec.sample_rate_hz);
    }
    }
    throw Error(ErrorKind::InvalidSpec, "unhandled filter kind");
}

} // namespace ntfforge::dsp
