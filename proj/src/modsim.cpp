#include "ntfforge/modsim.hpp"
#include "ntfforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ntfforge::modsim {

void Quantizer::validate() const {
    if (levels.size() < 2) {
        throw Error(ErrorKind::InvalidSpec, "quantizer needs at least two levels");
    }
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (!(levels[i] > levels[i - 1]) || !std::isfinite(levels[i])) {
            throw Error(ErrorKind::InvalidSpec, "quantizer levels must be finite and strictly increasing");
        }
    }
}

double Quantizer::delta() const {
    validate();
    return levels[1] - levels[0];
}

double Quantizer::quantize(double y) const {
    const auto it = std::lower_bound(levels.begin(), levels.end(), y);
    if (it == levels.begin()) {
        return levels.front();
    }
    if (it == levels.end()) {
        return levels.back();
    }
    const double hi = *it;
    const double lo = *(it - 1);
    return y < lo + 0.5 * (hi - lo) ? lo : hi;
}

LoopFilters loop_filters_from_ntf(std::span<const double> a, StfChoice stf, int delay) {
    if (a.empty() || a[0] != 1.0) {
        throw Error(ErrorKind::CausalityViolation, "NTF leading coefficient must be exactly 1");
    }
    const std::size_t d = stf == StfChoice::Unity ? 0 : static_cast<std::size_t>(std::max(delay, 0));
    if (stf == StfChoice::Delay && delay < 1) {
        throw Error(ErrorKind::InvalidSpec, "STF delay must be at least one sample");
    }

    LoopFilters lf;
    lf.ff.num.assign(d + 1, 0.0);
    lf.ff.num[d] = 1.0;
    lf.ff.den.assign(a.begin(), a.end());

    std::vector<double> one_minus(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        one_minus[k] = (k == 0 ? 1.0 : 0.0) - a[k];
    }
    for (std::size_t k = 0; k < d; ++k) {
        if (k < one_minus.size() && one_minus[k] != 0.0) {
            throw Error(ErrorKind::CausalityViolation, "feedback path (1 - NTF) / STF would be non-causal");
        }
    }
    if (d >= one_minus.size()) {
        lf.fb.num = {0.0};
    } else {
        lf.fb.num.assign(one_minus.begin() + static_cast<std::ptrdiff_t>(d), one_minus.end());
    }
    lf.fb.den = {1.0};

    if (lf.ff.num[0] * lf.fb.num[0] != 0.0) {
        throw Error(ErrorKind::CausalityViolation, "loop FF FB is not strictly causal");
    }
    return lf;
}

LoopFilters loop_filters_from_ntf(const NtfFir& ntf, StfChoice stf, int delay) {
    return loop_filters_from_ntf(ntf.coeffs(), stf, delay);
}

ModTrace simulate(const NtfFir& ntf, std::span<const double> input_w, const Quantizer& quantizer,
                  std::size_t n_discard) {
    quantizer.validate();
    for (double w : input_w) {
        if (!std::isfinite(w)) {
            throw Error(ErrorKind::Input, "non-finite input sample");
        }
    }
    const auto& a = ntf.coeffs();
    const std::size_t p = a.size() - 1;
    const double limit = quantizer.delta() / 2.0 + 1e-12;

    ModTrace tr;
    tr.input_w.assign(input_w.begin(), input_w.end());
    tr.output_x.reserve(input_w.size());
    tr.quant_error_e.reserve(input_w.size());
    tr.transient_discard = n_discard;

    // history[(n - k) mod p] holds e(n - k).
    std::vector<double> history(std::max<std::size_t>(p, 1), 0.0);
    std::size_t head = 0;
    for (std::size_t n = 0; n < input_w.size(); ++n) {
        double y = input_w[n];
        for (std::size_t k = 1; k <= p; ++k) {
            y += a[k] * history[(head + p - k) % p];
        }
        if (!(std::abs(y) < kDivergenceLimit)) {
            tr.diverged = true;
            tr.overloaded = true;
            tr.input_w.resize(n);
            break;
        }
        const double x = quantizer.quantize(y);
        const double e = x - y;
        tr.output_x.push_back(x);
        tr.quant_error_e.push_back(e);
        if (n >= n_discard) {
            tr.max_abs_error = std::max(tr.max_abs_error, std::abs(e));
            if (std::abs(e) > limit) {
                tr.overloaded = true;
            }
        }
        if (p > 0) {
            history[head] = e;
            head = (head + 1) % p;
        }
    }
    return tr;
}

ModTrace simulate(std::span<const double> ntf_num, std::span<const double> ntf_den, std::span<const double> input_w,
                  const Quantizer& quantizer, std::size_t n_discard) {
    quantizer.validate();
    if (ntf_num.empty() || ntf_den.empty() || ntf_den[0] == 0.0 || ntf_num[0] != ntf_den[0]) {
        throw Error(ErrorKind::CausalityViolation, "rational NTF must satisfy num[0] == den[0] != 0");
    }
    for (double w : input_w) {
        if (!std::isfinite(w)) {
            throw Error(ErrorKind::Input, "non-finite input sample");
        }
    }
    const double d0 = ntf_den[0];
    const std::size_t len = std::max(ntf_num.size(), ntf_den.size());
    std::vector<double> g(len, 0.0);
    std::vector<double> den(len, 0.0);
    for (std::size_t k = 1; k < len; ++k) {
        const double nk = k < ntf_num.size() ? ntf_num[k] : 0.0;
        const double dk = k < ntf_den.size() ? ntf_den[k] : 0.0;
        g[k] = (nk - dk) / d0;
        den[k] = dk / d0;
    }
    const double limit = quantizer.delta() / 2.0 + 1e-12;

    ModTrace tr;
    tr.input_w.assign(input_w.begin(), input_w.end());
    tr.transient_discard = n_discard;
    // Past errors and past feedback outputs, most recent first.
    std::vector<double> e_hist(len, 0.0);
    std::vector<double> v_hist(len, 0.0);
    for (std::size_t n = 0; n < input_w.size(); ++n) {
        double v = 0.0;
        for (std::size_t k = 1; k < len; ++k) {
            v += g[k] * e_hist[k - 1] - den[k] * v_hist[k - 1];
        }
        const double y = input_w[n] + v;
        if (!(std::abs(y) < kDivergenceLimit)) {
            tr.diverged = true;
            tr.overloaded = true;
            tr.input_w.resize(n);
            break;
        }
        const double x = quantizer.quantize(y);
        const double e = x - y;
        tr.output_x.push_back(x);
        tr.quant_error_e.push_back(e);
        if (n >= n_discard) {
            tr.max_abs_error = std::max(tr.max_abs_error, std::abs(e));
            if (std::abs(e) > limit) {
                tr.overloaded = true;
            }
        }
        if (len > 1) {
            std::copy_backward(e_hist.begin(), e_hist.end() - 1, e_hist.end());
            std::copy_backward(v_hist.begin(), v_hist.end() - 1, v_hist.end());
            e_hist[0] = e;
            v_hist[0] = v;
        }
    }
    return tr;
}

std::string to_string(SnrMethod method) { return method == SnrMethod::Expected ? "expected" : "simulated"; }

SnrReport measure_snr(const ModTrace& trace, const dsp::RationalFilter& filter) {
    if (trace.diverged) {
        throw Error(ErrorKind::UndefinedSnr, "modulator diverged; no stationary output to measure");
    }
    const std::size_t n = trace.output_x.size();
    const std::size_t settle = dsp::settling_length(filter);
    const std::size_t skip = std::max(trace.transient_discard, settle);
    if (n <= skip || n - skip < 8 * settle) {
        std::ostringstream msg;
        msg << "trace of " << n << " samples is too short: need " << skip << " discarded plus at least "
            << 8 * settle << " measured";
        throw Error(ErrorKind::Input, msg.str());
    }
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) {
        diff[i] = trace.input_w[i] - trace.output_x[i];
    }
    const auto sig = dsp::apply(filter, trace.input_w);
    const auto noise = dsp::apply(filter, diff);
    double ps = 0.0;
    double pn = 0.0;
    for (std::size_t i = skip; i < n; ++i) {
        ps += sig[i] * sig[i];
        pn += noise[i] * noise[i];
    }
    const double count = static_cast<double>(n - skip);
    SnrReport r;
    r.method = SnrMethod::Simulated;
    r.signal_power = ps / count;
    r.noise_power = pn / count;
    r.overloaded = trace.overloaded;
    r.amplitude = std::sqrt(2.0 * r.signal_power);
    if (!(r.signal_power > 0.0)) {
        throw Error(ErrorKind::UndefinedSnr, "signal power is zero");
    }
    if (r.noise_power == 0.0) {
        r.capped = true;
        r.snr_db = kSnrCapDb;
    } else {
        r.snr_db = std::min(kSnrCapDb, 10.0 * std::log10(r.signal_power / r.noise_power));
    }
    return r;
}

SnrReport expected_snr(double amplitude, double sigma2_h) {
    if (!(amplitude > 0.0) || !(sigma2_h > 0.0)) {
        throw Error(ErrorKind::InvalidSpec, "expected SNR needs positive amplitude and noise power");
    }
    SnrReport r;
    r.method = SnrMethod::Expected;
    r.amplitude = amplitude;
    r.signal_power = amplitude * amplitude / 2.0;
    r.noise_power = sigma2_h;
    r.snr_db = 10.0 * std::log10(r.signal_power / r.noise_power);
    return r;
}

SignalKind signal_kind_from_string(const std::string& name) {
    if (name == "sine") {
        return SignalKind::Sine;
    }
    if (name == "multitone") {
        return SignalKind::Multitone;
    }
    if (name == "dc") {
        return SignalKind::Dc;
    }
    throw Error(ErrorKind::InvalidSpec, "unknown signal kind '" + name + "'");
}

double coherent_frequency(double f_hz, double fs_hz, std::size_t n) {
    double cycles = std::round(f_hz * static_cast<double>(n) / fs_hz);
    if (f_hz > 0.0 && cycles < 1.0) {
        cycles = 1.0;
    }
    return cycles * fs_hz / static_cast<double>(n);
}

std::vector<double> make_test_signal(SignalKind kind, std::span<const double> freqs_hz,
                                     std::span<const double> amplitudes, double fs_hz, std::size_t n) {
    if (n == 0) {
        throw Error(ErrorKind::InvalidSpec, "signal length must be positive");
    }
    if (!(fs_hz > 0.0)) {
        throw Error(ErrorKind::InvalidSpec, "sample rate must be positive");
    }
    if (kind == SignalKind::Dc) {
        if (amplitudes.size() != 1) {
            throw Error(ErrorKind::Input, "dc signal takes exactly one amplitude");
        }
        return std::vector<double>(n, amplitudes[0]);
    }
    if (freqs_hz.size() != amplitudes.size()) {
        throw Error(ErrorKind::Input, "frequency and amplitude lists differ in length");
    }
    if (freqs_hz.empty() || (kind == SignalKind::Sine && freqs_hz.size() != 1)) {
        throw Error(ErrorKind::Input, "sine takes one tone, multitone at least one");
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < freqs_hz.size(); ++t) {
        if (!(freqs_hz[t] > 0.0) || freqs_hz[t] >= fs_hz / 2.0) {
            throw Error(ErrorKind::InvalidSpec, "tone frequency must lie in (0, fs/2)");
        }
        // Integer phase index keeps every period bit-identical.
        const auto cycles = static_cast<std::size_t>(
            std::llround(coherent_frequency(freqs_hz[t], fs_hz, n) * static_cast<double>(n) / fs_hz));
        const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] += amplitudes[t] * std::sin(step * static_cast<double>((cycles * i) % n));
        }
    }
    return out;
}

std::size_t default_transient(const NtfFir& ntf, const dsp::RationalFilter& filter) {
    return std::max(dsp::settling_length(filter), static_cast<std::size_t>(4 * ntf.order()));
}

} // namespace ntfforge::modsim
