#include "ntfforge/dsp.hpp"
#include "ntfforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ntfforge::dsp {

namespace {

Complex z_inverse(double omega) { return std::polar(1.0, -omega); }

std::vector<Complex> section_poles(const Section& s) {
    if (s.den.size() <= 1) {
        return {};
    }
    return polynomial_roots(s.den);
}

void validate_section(const Section& s) {
    if (s.num.empty() || s.den.empty()) {
        throw Error(ErrorKind::InvalidSpec, "filter section with empty coefficient list");
    }
    if (s.den.front() != 1.0) {
        throw Error(ErrorKind::InvalidSpec, "section denominator must have leading coefficient 1");
    }
    for (double v : s.num) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidSpec, "non-finite numerator coefficient");
        }
    }
    for (double v : s.den) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidSpec, "non-finite denominator coefficient");
        }
    }
    for (const Complex& p : section_poles(s)) {
        if (std::abs(p) >= 1.0 - kPoleMargin) {
            std::ostringstream msg;
            msg << "pole radius " << std::abs(p) << " is not safely inside the unit circle";
            throw Error(ErrorKind::Conditioning, msg.str());
        }
    }
}

} // namespace

Complex TransferFunction::response(double omega) const {
    const Complex zi = z_inverse(omega);
    return poly_eval_ascending(num, zi) / poly_eval_ascending(den, zi);
}

RationalFilter::RationalFilter(std::vector<Branch> branches, double sample_rate_hz)
    : branches_(std::move(branches)), sample_rate_hz_(sample_rate_hz) {
    if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
        throw Error(ErrorKind::InvalidSpec, "sample rate must be positive");
    }
    if (branches_.empty()) {
        throw Error(ErrorKind::InvalidSpec, "filter needs at least one branch");
    }
    for (const Branch& b : branches_) {
        if (!std::isfinite(b.gain)) {
            throw Error(ErrorKind::InvalidSpec, "non-finite branch gain");
        }
        for (const Section& s : b.sections) {
            validate_section(s);
        }
    }
}

RationalFilter RationalFilter::from_coefficients(std::vector<double> num, std::vector<double> den,
                                                 double sample_rate_hz) {
    if (den.empty() || den.front() == 0.0) {
        throw Error(ErrorKind::InvalidSpec, "denominator leading coefficient must be nonzero");
    }
    if (num.empty()) {
        throw Error(ErrorKind::InvalidSpec, "numerator must not be empty");
    }
    const double lead = den.front();
    for (double& v : num) {
        v /= lead;
    }
    for (double& v : den) {
        v /= lead;
    }
    den.front() = 1.0;
    return RationalFilter({Branch{1.0, {Section{std::move(num), std::move(den)}}}}, sample_rate_hz);
}

RationalFilter RationalFilter::identity(double sample_rate_hz) {
    return from_coefficients({1.0}, {1.0}, sample_rate_hz);
}

std::vector<double> RationalFilter::denominator_coeffs() const {
    std::vector<double> den{1.0};
    for (const Branch& b : branches_) {
        for (const Section& s : b.sections) {
            den = poly_multiply(den, s.den);
        }
    }
    return den;
}

std::vector<double> RationalFilter::numerator_coeffs() const {
    std::vector<double> num{0.0};
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        std::vector<double> term{branches_[i].gain};
        for (const Section& s : branches_[i].sections) {
            term = poly_multiply(term, s.num);
        }
        for (std::size_t j = 0; j < branches_.size(); ++j) {
            if (j == i) {
                continue;
            }
            for (const Section& s : branches_[j].sections) {
                term = poly_multiply(term, s.den);
            }
        }
        num = poly_add(num, term);
    }
    return num;
}

std::vector<Complex> RationalFilter::poles() const {
    std::vector<Complex> out;
    for (const Branch& b : branches_) {
        for (const Section& s : b.sections) {
            const auto p = section_poles(s);
            out.insert(out.end(), p.begin(), p.end());
        }
    }
    return out;
}

double RationalFilter::max_pole_radius() const {
    double r = 0.0;
    for (const Complex& p : poles()) {
        r = std::max(r, std::abs(p));
    }
    return r;
}

std::size_t RationalFilter::denominator_order() const {
    std::size_t n = 0;
    for (const Branch& b : branches_) {
        for (const Section& s : b.sections) {
            n += s.den.size() - 1;
        }
    }
    return n;
}

std::size_t RationalFilter::numerator_order() const {
    std::size_t best = 0;
    for (const Branch& b : branches_) {
        std::size_t n = 0;
        for (const Section& s : b.sections) {
            n += s.num.size() - 1;
        }
        best = std::max(best, n);
    }
    return best;
}

bool RationalFilter::is_fir() const {
    for (const Branch& b : branches_) {
        for (const Section& s : b.sections) {
            for (std::size_t k = 1; k < s.den.size(); ++k) {
                if (s.den[k] != 0.0) {
                    return false;
                }
            }
        }
    }
    return true;
}

Complex RationalFilter::response(double omega) const {
    const Complex zi = z_inverse(omega);
    Complex total = 0.0;
    for (const Branch& b : branches_) {
        Complex h = b.gain;
        for (const Section& s : b.sections) {
            h *= poly_eval_ascending(s.num, zi) / poly_eval_ascending(s.den, zi);
        }
        total += h;
    }
    return total;
}

FilterRunner::FilterRunner(const RationalFilter& filter) {
    for (const Branch& b : filter.branches()) {
        BranchState bs{b.gain, {}};
        for (const Section& s : b.sections) {
            const std::size_t order = std::max(s.num.size(), s.den.size()) - 1;
            bs.sections.push_back(SectionState{&s, std::vector<double>(order, 0.0)});
        }
        branches_.push_back(std::move(bs));
    }
}

void FilterRunner::reset() {
    for (auto& b : branches_) {
        for (auto& s : b.sections) {
            std::fill(s.state.begin(), s.state.end(), 0.0);
        }
    }
}

double FilterRunner::step(double input) {
    double total = 0.0;
    for (auto& b : branches_) {
        double v = input * b.gain;
        for (auto& st : b.sections) {
            const auto& num = st.section->num;
            const auto& den = st.section->den;
            auto& z = st.state;
            const std::size_t order = z.size();
            const double b0 = num[0];
            const double out = b0 * v + (order > 0 ? z[0] : 0.0);
            for (std::size_t k = 0; k < order; ++k) {
                const double bk = k + 1 < num.size() ? num[k + 1] : 0.0;
                const double ak = k + 1 < den.size() ? den[k + 1] : 0.0;
                const double next = k + 1 < order ? z[k + 1] : 0.0;
                z[k] = next + bk * v - ak * out;
            }
            v = out;
        }
        total += v;
    }
    return total;
}

std::vector<double> apply(const RationalFilter& filter, std::span<const double> input) {
    FilterRunner runner(filter);
    std::vector<double> out(input.size());
    std::transform(input.begin(), input.end(), out.begin(), [&](double x) { return runner.step(x); });
    return out;
}

std::string to_string(FilterKind kind) {
    switch (kind) {
    case FilterKind::LowpassButterworth: return "lowpass_butterworth";
    case FilterKind::BandpassButterworth: return "bandpass_butterworth";
    case FilterKind::MultibandButterworth: return "multiband_butterworth";
    case FilterKind::ExplicitRational: return "explicit_rational";
    case FilterKind::ExplicitImpulse: return "explicit_impulse";
    }
    return "unknown";
}

FilterKind filter_kind_from_string(const std::string& name) {
    for (FilterKind k : {FilterKind::LowpassButterworth, FilterKind::BandpassButterworth,
                         FilterKind::MultibandButterworth, FilterKind::ExplicitRational,
                         FilterKind::ExplicitImpulse}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw Error(ErrorKind::InvalidSpec, "unknown filter kind '" + name + "'");
}

int FilterSpec::order_per_band() const {
    if (bands_hz.empty()) {
        return order;
    }
    return order / static_cast<int>(bands_hz.size());
}

void FilterSpec::validate() const {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
        throw Error(ErrorKind::InvalidSpec, "fs_hz must be positive");
    }
    switch (kind) {
    case FilterKind::ExplicitRational:
        if (num.empty() || den.empty() || den.front() == 0.0) {
            throw Error(ErrorKind::InvalidSpec, "explicit_rational needs num and den with den[0] != 0");
        }
        return;
    case FilterKind::ExplicitImpulse:
        if (impulse.empty()) {
            throw Error(ErrorKind::InvalidSpec, "explicit_impulse needs a nonempty impulse response");
        }
        return;
    default:
        break;
    }

    if (order < 1) {
        throw Error(ErrorKind::InvalidSpec, "filter order must be positive");
    }
    if (bands_hz.empty()) {
        throw Error(ErrorKind::InvalidSpec, "band edges missing");
    }
    const double nyquist = sample_rate_hz / 2.0;
    double previous_high = -1.0;
    for (const Band& b : bands_hz) {
        if (!(b.low_hz >= 0.0) || !(b.high_hz > b.low_hz)) {
            throw Error(ErrorKind::InvalidSpec, "band edges must be strictly increasing and non-negative");
        }
        if (b.high_hz >= nyquist) {
            throw Error(ErrorKind::InvalidSpec, "band edge at or above Nyquist");
        }
        if (!(b.low_hz > previous_high)) {
            throw Error(ErrorKind::InvalidSpec, "bands must be disjoint and in increasing order");
        }
        previous_high = b.high_hz;
    }

    const auto per_band_ok = [](const Band& b, int band_order) {
        if (b.low_hz == 0.0) {
            return band_order >= 1;
        }
        return band_order >= 2 && band_order % 2 == 0;
    };

    switch (kind) {
    case FilterKind::LowpassButterworth:
        if (bands_hz.size() != 1 || bands_hz[0].low_hz != 0.0) {
            throw Error(ErrorKind::InvalidSpec, "lowpass needs exactly one band [0, cutoff]");
        }
        break;
    case FilterKind::BandpassButterworth:
        if (bands_hz.size() != 1 || bands_hz[0].low_hz <= 0.0) {
            throw Error(ErrorKind::InvalidSpec, "bandpass needs exactly one band with positive lower edge");
        }
        if (!per_band_ok(bands_hz[0], order)) {
            throw Error(ErrorKind::InvalidSpec, "bandpass order must be even");
        }
        break;
    case FilterKind::MultibandButterworth:
        if (order % static_cast<int>(bands_hz.size()) != 0) {
            throw Error(ErrorKind::InvalidSpec, "multiband order must split evenly across bands");
        }
        for (const Band& b : bands_hz) {
            if (!per_band_ok(b, order_per_band())) {
                throw Error(ErrorKind::InvalidSpec, "band-pass sections of a multiband filter need an even order");
            }
        }
        break;
    default:
        break;
    }
}

FrequencyGrid FrequencyGrid::uniform(std::size_t count) {
    if (count < 2) {
        throw Error(ErrorKind::InvalidSpec, "frequency grid needs at least two points");
    }
    FrequencyGrid g;
    g.omegas.resize(count);
    const double step = std::numbers::pi / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
        g.omegas[k] = step * static_cast<double>(k);
    }
    g.omegas.back() = std::numbers::pi;
    return g;
}

ImpulseResponse impulse_response(const RationalFilter& filter, double energy_tol, std::size_t hard_cap) {
    if (!(energy_tol > 0.0 && energy_tol < 1.0)) {
        throw Error(ErrorKind::InvalidSpec, "energy tolerance must lie in (0, 1)");
    }
    ImpulseResponse out;
    FilterRunner runner(filter);

    if (filter.is_fir()) {
        const std::size_t length = filter.numerator_order() + 1;
        for (std::size_t n = 0; n < length; ++n) {
            out.samples.push_back(runner.step(n == 0 ? 1.0 : 0.0));
        }
        while (out.samples.size() > 1 && out.samples.back() == 0.0) {
            out.samples.pop_back();
        }
        for (double h : out.samples) {
            out.energy += h * h;
        }
        return out;
    }

    // Tail estimate: once the natural modes dominate, the energy in any window
    // of K samples shrinks by at least r^(2K) per window, r the largest pole
    // radius. K spans the slowest oscillation so a window never sits in a
    // single lull of the envelope.
    const auto poles = filter.poles();
    double r = 0.0;
    double min_angle = std::numbers::pi;
    for (const Complex& p : poles) {
        r = std::max(r, std::abs(p));
        const double angle = std::abs(std::arg(p));
        if (std::abs(p.imag()) > 1e-12 && angle > 0.0) {
            min_angle = std::min(min_angle, angle);
        }
    }
    std::size_t window = std::max<std::size_t>(1, filter.denominator_order());
    if (min_angle < std::numbers::pi) {
        const double period = 2.0 * std::numbers::pi / min_angle;
        window = std::max(window, static_cast<std::size_t>(std::ceil(period)));
    }
    window = std::min<std::size_t>(window, std::size_t{1} << 16);
    const double decay = std::pow(r, 2.0 * static_cast<double>(window));
    const double tail_factor = decay / (1.0 - decay);
    const std::size_t first_check = std::max(window - 1, filter.numerator_order());

    double window_energy = 0.0;
    for (std::size_t n = 0;; ++n) {
        if (n >= hard_cap) {
            std::ostringstream msg;
            msg << "impulse response does not settle to " << energy_tol << " within " << hard_cap << " samples";
            throw Error(ErrorKind::TruncationOverflow, msg.str());
        }
        const double h = runner.step(n == 0 ? 1.0 : 0.0);
        out.samples.push_back(h);
        out.energy += h * h;
        window_energy += h * h;
        if (n >= window) {
            const double dropped = out.samples[n - window];
            window_energy -= dropped * dropped;
        }
        if (n >= first_check && out.energy > 0.0) {
            const double tail = std::max(window_energy, 0.0) * tail_factor;
            if (tail <= energy_tol * out.energy) {
                out.tail_energy_fraction = tail / (out.energy + tail);
                break;
            }
        }
    }
    return out;
}

ImpulseResponse impulse_response(const FilterSpec& spec, double energy_tol, std::size_t hard_cap) {
    auto ir = impulse_response(design_filter(spec), energy_tol, hard_cap);
    ir.source = spec;
    return ir;
}

std::size_t settling_length(const RationalFilter& filter, double energy_tol) {
    return impulse_response(filter, energy_tol).samples.size();
}

std::vector<Complex> frequency_response(std::span<const double> num, std::span<const double> den,
                                        const FrequencyGrid& grid) {
    if (num.empty() || den.empty()) {
        throw Error(ErrorKind::Evaluation, "empty coefficient list");
    }
    std::vector<Complex> out(grid.count());
    for (std::size_t k = 0; k < grid.count(); ++k) {
        const double w = grid.omegas[k];
        const Complex zi = z_inverse(w);
        const Complex d = poly_eval_ascending(den, zi);
        if (std::abs(d) < 1e-14) {
            std::ostringstream msg;
            msg << "denominator vanishes at omega = " << w;
            throw Error(ErrorKind::Evaluation, msg.str());
        }
        out[k] = poly_eval_ascending(num, zi) / d;
    }
    return out;
}

std::vector<Complex> frequency_response(const RationalFilter& filter, const FrequencyGrid& grid) {
    std::vector<Complex> out(grid.count());
    std::transform(grid.omegas.begin(), grid.omegas.end(), out.begin(),
                   [&](double w) { return filter.response(w); });
    return out;
}

} // namespace ntfforge::dsp
