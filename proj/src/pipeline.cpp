#include "ntfforge/pipeline.hpp"
#include "ntfforge/error.hpp"
#include "ntfforge/objective.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace ntfforge::pipeline {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

objective::NoiseBudget budget_for(const DesignSpec& spec) { return {spec.quantizer.delta()}; }

// Total mean-square power of the configured test signal at a given per-tone amplitude.
double signal_power(const EvaluationSettings& e, double amplitude) {
    if (e.signal == modsim::SignalKind::Dc) {
        return amplitude * amplitude;
    }
    return static_cast<double>(e.freqs_hz.size()) * amplitude * amplitude / 2.0;
}

std::vector<double> test_signal(const DesignSpec& spec, modsim::SignalKind kind, double amplitude) {
    const std::vector<double> amps(kind == modsim::SignalKind::Dc ? 1 : spec.evaluation.freqs_hz.size(), amplitude);
    return modsim::make_test_signal(kind, spec.evaluation.freqs_hz, amps, spec.sample_rate_hz(),
                                    spec.evaluation.length);
}

} // namespace

NtfArtifact DesignResult::artifact() const {
    NtfArtifact a;
    a.num = ntf.coeffs();
    a.den = {1.0};
    a.gamma = gamma;
    a.sigma2_h = sigma2_h;
    a.certificate = certificate;
    a.solver_status = sdp::to_string(solution.status);
    a.solver_iterations = solution.iterations;
    a.duality_gap = solution.duality_gap;
    return a;
}

DesignResult design(const DesignSpec& spec) {
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const auto filter = dsp::design_filter(spec.filter);
    const auto h = dsp::impulse_response(filter);
    const auto q = objective::build_q_matrix(h, spec.fir_order);
    const sdp::SdpProblem problem(objective::reduce_objective(q), kyp::assemble_lmi(spec.fir_order, spec.gamma));
    spdlog::info("design P={} gamma={} impulse length {} variables {}", spec.fir_order, spec.gamma, h.samples.size(),
                 problem.variable_count());

    DesignResult r;
    r.gamma = spec.gamma;
    r.impulse_length = h.samples.size();
    r.solution = sdp::solve(problem, spec.solver);
    if (r.solution.status != sdp::SolveStatus::Optimal) {
        throw Error(ErrorKind::Solver, std::string("SDP ended with status ") + sdp::to_string(r.solution.status) +
                                           " after " + std::to_string(r.solution.iterations) +
                                           " iterations: " + r.solution.message);
    }
    r.ntf = sdp::extract_ntf(r.solution, spec.fir_order);

    const auto budget = budget_for(spec);
    r.sigma2_h = objective::sigma2_h_fir(q, r.ntf.coeffs(), budget);
    const std::vector<double> one{1.0};
    r.sigma2_h_quadrature = objective::sigma2_h(r.ntf.coeffs(), one, filter, budget,
                                                dsp::FrequencyGrid::uniform(spec.grid_points));

    r.certificate = kyp::evaluate_certificate(r.ntf, spec.gamma, r.solution.certificate());
    r.runtime_seconds = seconds_since(t0);
    spdlog::info("design P={} done in {:.3f} s: sigma2_h {:.6e}, grid max {:.6f}, max eig {:.3e}", spec.fir_order,
                 r.runtime_seconds, r.sigma2_h, r.certificate.grid_max, r.certificate.max_eig_big);

    if (!r.certificate.grid_satisfied()) {
        throw Error(ErrorKind::BoundViolation, "designed NTF peaks at " + io::format_number(r.certificate.grid_max) +
                                                   " above gamma " + io::format_number(spec.gamma));
    }
    if (!r.certificate.lmi_satisfied()) {
        throw Error(ErrorKind::BoundViolation,
                    "solver certificate fails the LMI test (max eig " + io::format_number(r.certificate.max_eig_big) +
                        ", min eig P " + io::format_number(r.certificate.min_eig_p) + ")");
    }
    return r;
}

std::vector<SweepRow> sweep(const DesignSpec& spec, const std::vector<int>& orders) {
    if (orders.empty()) {
        throw Error(ErrorKind::InvalidSpec, "sweep needs at least one order");
    }
    for (std::size_t i = 1; i < orders.size(); ++i) {
        if (orders[i] <= orders[i - 1]) {
            throw Error(ErrorKind::InvalidSpec, "sweep orders must be strictly ascending");
        }
    }
    std::vector<SweepRow> rows(orders.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < orders.size(); i = next++) {
            SweepRow& row = rows[i];
            row.order = orders[i];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                DesignSpec s = spec;
                s.fir_order = orders[i];
                const auto r = design(s);
                row.sigma_h = std::sqrt(r.sigma2_h);
                row.status = "optimal";
            } catch (const Error& e) {
                row.status = to_string(e.kind());
                row.message = e.what();
                spdlog::warn("sweep order {} failed: {}", orders[i], e.what());
            }
            row.runtime_seconds = seconds_since(t0);
        }
    };
    const std::size_t n_threads =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), std::size_t{1}, orders.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    return rows;
}

io::CsvTable sweep_csv(const std::vector<SweepRow>& rows) {
    io::CsvTable t{{"P", "sigma_h", "runtime_s", "status"}, {}};
    for (const auto& r : rows) {
        t.add_row({std::to_string(r.order), io::format_number(r.sigma_h), io::format_number(r.runtime_seconds),
                   r.status});
    }
    return t;
}

SnrPoint snr_at(const NtfFir& ntf, const DesignSpec& spec, double amplitude) {
    const auto filter = dsp::design_filter(spec.filter);
    const auto h = dsp::impulse_response(filter);
    const auto q = objective::build_q_matrix(h, std::max(ntf.order(), 1));
    std::vector<double> a = ntf.coeffs();
    a.resize(static_cast<std::size_t>(q.order()) + 1, 0.0);
    const double s2 = objective::sigma2_h_fir(q, a, budget_for(spec));

    SnrPoint pt;
    pt.expected = modsim::expected_snr(std::sqrt(2.0 * signal_power(spec.evaluation, amplitude)), s2);
    pt.expected.amplitude = amplitude;
    const auto w = test_signal(spec, spec.evaluation.signal, amplitude);
    pt.trace = modsim::simulate(ntf, w, spec.quantizer, modsim::default_transient(ntf, filter));
    if (!pt.trace.diverged) {
        pt.simulated = modsim::measure_snr(pt.trace, filter);
        pt.simulated->amplitude = amplitude;
    }
    return pt;
}

EvaluationReport evaluate(const NtfArtifact& art, const DesignSpec& spec, const EvaluateOptions& opt) {
    spec.validate();
    art.validate();
    const auto t0 = std::chrono::steady_clock::now();

    EvaluationReport rep;
    rep.ntf_num = art.num;
    rep.ntf_den = art.den;
    rep.gamma = opt.gamma.value_or(art.gamma.value_or(spec.gamma));
    const auto filter = dsp::design_filter(spec.filter);
    const auto budget = budget_for(spec);
    rep.grid = dsp::FrequencyGrid::uniform(spec.grid_points);

    rep.sigma2_h_quadrature = objective::sigma2_h(art.num, art.den, filter, budget, rep.grid);
    rep.sigma2_h = rep.sigma2_h_quadrature;
    std::optional<NtfFir> fir;
    if (art.is_fir()) {
        fir = art.fir();
        const auto h = dsp::impulse_response(filter);
        const auto q = objective::build_q_matrix(h, std::max(fir->order(), 1));
        std::vector<double> a = fir->coeffs();
        a.resize(static_cast<std::size_t>(q.order()) + 1, 0.0);
        rep.sigma2_h_closed_form = objective::sigma2_h_fir(q, a, budget);
        rep.sigma2_h = *rep.sigma2_h_closed_form;
    }

    const double amplitude = opt.amplitude.value_or(spec.evaluation.amplitude);
    const auto kind = opt.signal.value_or(spec.evaluation.signal);
    EvaluationSettings eval = spec.evaluation;
    eval.signal = kind;
    eval.amplitude = amplitude;
    eval.validate(spec.sample_rate_hz());
    rep.expected = modsim::expected_snr(std::sqrt(2.0 * signal_power(eval, amplitude)), rep.sigma2_h);
    rep.expected.amplitude = amplitude;

    const auto w = test_signal(spec, kind, amplitude);
    const std::size_t order = art.num.size() - 1;
    const std::size_t discard = std::max(dsp::settling_length(filter), 4 * order);
    const auto trace = fir ? modsim::simulate(*fir, w, spec.quantizer, discard)
                           : modsim::simulate(art.num, art.den, w, spec.quantizer, discard);
    rep.overloaded = trace.overloaded;
    rep.diverged = trace.diverged;
    rep.max_abs_error = trace.max_abs_error;
    if (!trace.diverged) {
        rep.simulated = modsim::measure_snr(trace, filter);
        rep.simulated->amplitude = amplitude;
    }

    const auto g = dsp::FrequencyGrid::uniform(kyp::kLeeGridPoints);
    for (const auto& v : dsp::frequency_response(art.num, art.den, g)) {
        rep.grid_max_ntf = std::max(rep.grid_max_ntf, std::abs(v));
    }
    rep.lee_pass = rep.grid_max_ntf <= rep.gamma * (1.0 + kyp::kGridSlack);

    if (!fir) {
        rep.certificate_status = "not_applicable";
    } else if (art.certificate) {
        rep.certificate = kyp::evaluate_certificate(*fir, rep.gamma, art.certificate->p_matrix);
        rep.certificate_status = rep.certificate->lmi_satisfied() ? "supplied_valid" : "supplied_invalid";
    } else if (opt.certify) {
        try {
            rep.certificate = kyp::verify_bounded_real(*fir, rep.gamma);
            rep.certificate_status = "found";
        } catch (const Error& e) {
            rep.certificate_status = e.kind() == ErrorKind::BoundViolation ? "infeasible" : "solver_failure";
            spdlog::warn("certificate search: {}", e.what());
        }
    } else {
        rep.certificate_status = "skipped";
    }

    if (art.num.size() > 1) {
        rep.zeros = dsp::polynomial_roots(art.num);
    }
    rep.integrand = objective::merit_integrand(art.num, art.den, filter, rep.grid);
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

io::json EvaluationReport::to_json() const {
    using io::json;
    json j;
    j["ntf_coeffs"] = ntf_num;
    if (ntf_den != std::vector<double>{1.0}) {
        j["ntf_den"] = ntf_den;
    }
    j["gamma"] = gamma;
    j["sigma2_h"] = sigma2_h;
    j["sigma2_h_quadrature"] = sigma2_h_quadrature;
    j["sigma2_h_closed_form"] = sigma2_h_closed_form ? json(*sigma2_h_closed_form) : json(nullptr);
    j["amplitude"] = expected.amplitude;
    j["expected_snr_db"] = expected.snr_db;
    if (simulated) {
        j["simulated_snr_db"] = simulated->snr_db;
        j["simulated_signal_power"] = simulated->signal_power;
        j["simulated_noise_power"] = simulated->noise_power;
        j["simulated_snr_capped"] = simulated->capped;
    } else {
        j["simulated_snr_db"] = nullptr;
    }
    j["overloaded"] = overloaded;
    j["diverged"] = diverged;
    j["max_abs_quant_error"] = max_abs_error;
    j["grid_max_ntf"] = grid_max_ntf;
    j["lee_pass"] = lee_pass;
    j["pass"] = pass();
    json cert;
    cert["status"] = certificate_status;
    if (certificate) {
        cert["max_eig_big"] = certificate->max_eig_big;
        cert["min_eig_p"] = certificate->min_eig_p;
        cert["grid_max"] = certificate->grid_max;
    }
    j["certificate"] = cert;
    json z = json::array();
    for (const auto& v : zeros) {
        z.push_back({v.real(), v.imag()});
    }
    j["zeros"] = z;
    j["runtime_seconds"] = runtime_seconds;
    return j;
}

CurveKind curve_kind_from_string(const std::string& name) {
    if (name == "filter") {
        return CurveKind::Filter;
    }
    if (name == "ntf") {
        return CurveKind::Ntf;
    }
    if (name == "integrand") {
        return CurveKind::Integrand;
    }
    throw Error(ErrorKind::InvalidSpec, "unknown curve kind '" + name + "' (filter, ntf, integrand)");
}

io::CsvTable curve(CurveKind kind, const std::optional<DesignSpec>& spec, const std::optional<NtfArtifact>& ntf,
                   std::size_t grid_points) {
    const auto grid = dsp::FrequencyGrid::uniform(grid_points);
    const auto db = [](double mag) { return 20.0 * std::log10(std::max(mag, 1e-20)); };
    io::CsvTable t;
    std::vector<double> values(grid.count());
    switch (kind) {
    case CurveKind::Filter: {
        if (!spec) {
            throw Error(ErrorKind::InvalidSpec, "filter curve needs a design spec");
        }
        const auto h = dsp::frequency_response(dsp::design_filter(spec->filter), grid);
        std::transform(h.begin(), h.end(), values.begin(), [&](dsp::Complex v) { return db(std::abs(v)); });
        t.header = {"omega_rad", "magnitude_db"};
        break;
    }
    case CurveKind::Ntf: {
        if (!ntf) {
            throw Error(ErrorKind::InvalidSpec, "ntf curve needs an NTF file");
        }
        const auto r = dsp::frequency_response(ntf->num, ntf->den, grid);
        std::transform(r.begin(), r.end(), values.begin(), [&](dsp::Complex v) { return db(std::abs(v)); });
        t.header = {"omega_rad", "magnitude_db"};
        break;
    }
    case CurveKind::Integrand: {
        if (!spec || !ntf) {
            throw Error(ErrorKind::InvalidSpec, "integrand curve needs both a design spec and an NTF file");
        }
        values = objective::merit_integrand(ntf->num, ntf->den, dsp::design_filter(spec->filter), grid);
        t.header = {"omega_rad", "integrand_linear"};
        break;
    }
    }
    for (std::size_t k = 0; k < grid.count(); ++k) {
        t.add_row({io::format_number(grid.omegas[k]), io::format_number(values[k])});
    }
    return t;
}

} // namespace ntfforge::pipeline
