// Batch front end: design, sweep, evaluate, curves, verify.

#include "ntfforge/error.hpp"
#include "ntfforge/io.hpp"
#include "ntfforge/pipeline.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

using namespace ntfforge;

enum Exit : int { kOk = 0, kValidation = 2, kSolver = 3, kVerification = 4 };

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Solver:
    case ErrorKind::Extraction: return kSolver;
    case ErrorKind::BoundViolation: return kVerification;
    default: return kValidation;
    }
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("ntfforge");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* lvl = std::getenv("NTFFORGE_LOG")) {
        spdlog::set_level(spdlog::level::from_str(lvl));
    }
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        io::write_text_atomic(out, text);
    }
}

struct Options {
    std::string config;
    std::string out;
    std::string ntf;
    std::vector<int> orders;
    std::optional<double> amplitude;
    std::optional<double> gamma;
    std::optional<std::size_t> grid;
    std::optional<int> order;
    std::string signal;
    std::string what;
    bool strict = false;
};

DesignSpec load_spec(const Options& o) {
    DesignSpec spec = io::load_design_spec(o.config);
    if (o.gamma) {
        spec.gamma = *o.gamma;
    }
    if (o.grid) {
        spec.grid_points = *o.grid;
    }
    if (o.order) {
        spec.fir_order = *o.order;
    }
    spec.validate();
    return spec;
}

int cmd_design(const Options& o) {
    const auto spec = load_spec(o);
    const auto result = pipeline::design(spec);
    emit(o.out, io::to_json(result.artifact()).dump(2) + "\n");
    spdlog::info("sigma2_h {} expected SNR at A={} : {:.3f} dB", result.sigma2_h, spec.evaluation.amplitude,
                 modsim::expected_snr(spec.evaluation.amplitude, result.sigma2_h).snr_db);
    return kOk;
}

int cmd_sweep(const Options& o) {
    const auto spec = load_spec(o);
    const auto rows = pipeline::sweep(spec, o.orders.empty() ? std::vector<int>{spec.fir_order} : o.orders);
    emit(o.out, pipeline::sweep_csv(rows).str());
    const bool any_failed =
        std::any_of(rows.begin(), rows.end(), [](const pipeline::SweepRow& r) { return r.status != "optimal"; });
    return any_failed ? kSolver : kOk;
}

int cmd_evaluate(const Options& o) {
    const auto spec = load_spec(o);
    const auto ntf = io::load_ntf(o.ntf);
    pipeline::EvaluateOptions eo;
    eo.amplitude = o.amplitude;
    eo.gamma = o.gamma;
    if (!o.signal.empty()) {
        eo.signal = modsim::signal_kind_from_string(o.signal);
    }
    const auto rep = pipeline::evaluate(ntf, spec, eo);
    emit(o.out, rep.to_json().dump(2) + "\n");
    if (!o.out.empty() && o.out != "-") {
        io::CsvTable t{{"omega", "value"}, {}};
        for (std::size_t k = 0; k < rep.integrand.size(); ++k) {
            t.add_row({io::format_number(rep.grid.omegas[k]), io::format_number(rep.integrand[k])});
        }
        io::write_text_atomic(o.out + ".integrand.csv", t.str());
    }
    if (rep.overloaded) {
        spdlog::warn("modulator overloaded (max |e| = {})", rep.max_abs_error);
    }
    if (o.strict && !rep.pass()) {
        return kVerification;
    }
    return kOk;
}

int cmd_curves(const Options& o) {
    const auto kind = pipeline::curve_kind_from_string(o.what);
    std::optional<DesignSpec> spec;
    std::optional<NtfArtifact> ntf;
    if (!o.config.empty()) {
        spec = load_spec(o);
    }
    if (!o.ntf.empty()) {
        ntf = io::load_ntf(o.ntf);
    }
    const std::size_t points = o.grid.value_or(spec ? spec->grid_points : dsp::kDefaultGridPoints);
    emit(o.out, pipeline::curve(kind, spec, ntf, points).str());
    return kOk;
}

int cmd_verify(const Options& o) {
    const auto art = io::load_ntf(o.ntf);
    double gamma = kyp::kDefaultGamma;
    if (!o.config.empty()) {
        gamma = load_spec(o).gamma;
    } else if (art.gamma) {
        gamma = *art.gamma;
    }
    if (o.gamma) {
        gamma = *o.gamma;
    }
    const auto fir = art.fir();
    std::optional<Eigen::MatrixXd> p;
    if (art.certificate && art.certificate->gamma == gamma) {
        p = art.certificate->p_matrix;
    }
    const auto cert = kyp::verify_bounded_real(fir, gamma, p);
    emit(o.out, io::to_json(cert).dump(2) + "\n");
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"FIR noise-transfer-function design for delta-sigma modulators"};
    app.require_subcommand(1);
    Options o;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output file (stdout when omitted)");
        sub->add_option("--gamma", o.gamma, "Override the NTF gain bound");
        sub->add_option("--grid", o.grid, "Frequency grid points")->check(CLI::Range(2, 1 << 24));
    };

    auto* design = app.add_subcommand("design", "Design an NTF from a JSON spec");
    design->add_option("--config", o.config, "Design spec JSON")->required();
    design->add_option("--order", o.order, "Override the FIR order");
    add_common(design);

    auto* sweep = app.add_subcommand("sweep", "Design over a list of orders");
    sweep->add_option("--config", o.config, "Design spec JSON")->required();
    sweep->add_option("--orders", o.orders, "Comma-separated ascending orders")->delimiter(',');
    add_common(sweep);

    auto* evaluate = app.add_subcommand("evaluate", "Expected and simulated SNR of an NTF");
    evaluate->add_option("--config", o.config, "Design spec JSON")->required();
    evaluate->add_option("--ntf", o.ntf, "NTF JSON")->required();
    evaluate->add_option("--amplitude", o.amplitude, "Per-tone test amplitude");
    evaluate->add_option("--signal", o.signal, "sine, multitone or dc");
    evaluate->add_flag("--strict", o.strict, "Nonzero exit when overloaded or over the gain bound");
    add_common(evaluate);

    auto* curves = app.add_subcommand("curves", "Response curves as CSV");
    curves->add_option("--what", o.what, "filter, ntf or integrand")->required();
    curves->add_option("--config", o.config, "Design spec JSON");
    curves->add_option("--ntf", o.ntf, "NTF JSON");
    add_common(curves);

    auto* verify = app.add_subcommand("verify", "Check an NTF against the bounded-real LMI");
    verify->add_option("--ntf", o.ntf, "NTF JSON")->required();
    verify->add_option("--config", o.config, "Design spec JSON (for gamma)");
    add_common(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (*design) {
            return cmd_design(o);
        }
        if (*sweep) {
            return cmd_sweep(o);
        }
        if (*evaluate) {
            return cmd_evaluate(o);
        }
        if (*curves) {
            return cmd_curves(o);
        }
        if (*verify) {
            return cmd_verify(o);
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kValidation;
    }
    return kValidation;
}
