#include "ntfforge/io.hpp"
#include "ntfforge/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ntfforge::io {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, std::string(what) + ": " + e.what());
    }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto n = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != n) {
            throw Error(ErrorKind::InvalidSpec, "certificate matrix must be square");
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
        }
    }
    return m;
}

std::string signal_name(modsim::SignalKind k) {
    switch (k) {
    case modsim::SignalKind::Sine: return "sine";
    case modsim::SignalKind::Multitone: return "multitone";
    case modsim::SignalKind::Dc: return "dc";
    }
    return "sine";
}

} // namespace

json to_json(const dsp::FilterSpec& s) {
    json j;
    j["kind"] = dsp::to_string(s.kind);
    switch (s.kind) {
    case dsp::FilterKind::ExplicitRational:
        j["num"] = s.num;
        j["den"] = s.den;
        break;
    case dsp::FilterKind::ExplicitImpulse:
        j["impulse"] = s.impulse;
        break;
    default: {
        j["order"] = s.order;
        json bands = json::array();
        for (const auto& b : s.bands_hz) {
            bands.push_back({b.low_hz, b.high_hz});
        }
        j["bands_hz"] = bands;
    }
    }
    j["fs_hz"] = s.sample_rate_hz;
    return j;
}

dsp::FilterSpec filter_spec_from_json(const json& j, std::optional<double> default_fs) {
    return guarded("filter", [&] {
        dsp::FilterSpec s;
        s.kind = dsp::filter_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("fs_hz")) {
            s.sample_rate_hz = j.at("fs_hz").get<double>();
        } else if (default_fs) {
            s.sample_rate_hz = *default_fs;
        } else {
            throw Error(ErrorKind::InvalidSpec, "filter has no fs_hz");
        }
        switch (s.kind) {
        case dsp::FilterKind::ExplicitRational:
            s.num = j.at("num").get<std::vector<double>>();
            s.den = j.at("den").get<std::vector<double>>();
            break;
        case dsp::FilterKind::ExplicitImpulse:
            s.impulse = j.at("impulse").get<std::vector<double>>();
            break;
        default:
            for (const auto& b : j.at("bands_hz")) {
                if (b.size() != 2) {
                    throw Error(ErrorKind::InvalidSpec, "each band is a [low, high] pair");
                }
                s.bands_hz.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
            }
            if (j.contains("order")) {
                s.order = j.at("order").get<int>();
            } else if (j.contains("order_per_band")) {
                s.order = j.at("order_per_band").get<int>() * static_cast<int>(s.bands_hz.size());
            } else {
                throw Error(ErrorKind::InvalidSpec, "filter needs an order");
            }
        }
        return s;
    });
}

json to_json(const sdp::SolverSettings& s) {
    return {{"gap_tol", s.gap_tol}, {"feas_tol", s.feas_tol}, {"max_iter", s.max_iter}};
}

sdp::SolverSettings solver_settings_from_json(const json& j) {
    return guarded("solver", [&] {
        sdp::SolverSettings s;
        s.gap_tol = j.value("gap_tol", s.gap_tol);
        s.feas_tol = j.value("feas_tol", s.feas_tol);
        s.max_iter = j.value("max_iter", s.max_iter);
        s.validate();
        return s;
    });
}

json to_json(const kyp::BoundedRealCertificate& c) {
    return {{"gamma", c.gamma},
            {"grid_max", c.grid_max},
            {"max_eig_big", c.max_eig_big},
            {"min_eig_p", c.min_eig_p},
            {"p_matrix", matrix_to_json(c.p_matrix)}};
}

kyp::BoundedRealCertificate certificate_from_json(const json& j) {
    return guarded("certificate", [&] {
        kyp::BoundedRealCertificate c;
        c.gamma = j.at("gamma").get<double>();
        c.grid_max = j.value("grid_max", 0.0);
        c.max_eig_big = j.value("max_eig_big", 0.0);
        c.min_eig_p = j.value("min_eig_p", 0.0);
        c.p_matrix = matrix_from_json(j.at("p_matrix"));
        return c;
    });
}

json to_json(const EvaluationSettings& e) {
    return {{"signal", signal_name(e.signal)},
            {"freqs_hz", e.freqs_hz},
            {"amplitude", e.amplitude},
            {"length", e.length}};
}

EvaluationSettings evaluation_settings_from_json(const json& j) {
    return guarded("evaluation", [&] {
        EvaluationSettings e;
        if (j.contains("signal")) {
            e.signal = modsim::signal_kind_from_string(j.at("signal").get<std::string>());
        }
        e.freqs_hz = j.value("freqs_hz", e.freqs_hz);
        e.amplitude = j.value("amplitude", e.amplitude);
        e.length = j.value("length", e.length);
        return e;
    });
}

json to_json(const DesignSpec& s) {
    json j;
    if (!s.name.empty()) {
        j["name"] = s.name;
    }
    j["fs_hz"] = s.sample_rate_hz();
    json f = to_json(s.filter);
    f.erase("fs_hz");
    j["filter"] = f;
    j["fir_order"] = s.fir_order;
    j["gamma"] = s.gamma;
    j["quantizer_levels"] = s.quantizer.levels;
    j["solver"] = to_json(s.solver);
    j["grid_points"] = s.grid_points;
    j["evaluation"] = to_json(s.evaluation);
    return j;
}

DesignSpec design_spec_from_json(const json& j) {
    return guarded("design spec", [&] {
        DesignSpec s;
        s.name = j.value("name", std::string{});
        const json& fj = j.at("filter");

        std::optional<double> fs;
        if (j.contains("fs_hz")) {
            fs = j.at("fs_hz").get<double>();
        }
        if (j.contains("osr")) {
            // fs = 2 OSR B, B the total signal bandwidth.
            const double osr = j.at("osr").get<double>();
            double bw = 0.0;
            for (const auto& b : fj.at("bands_hz")) {
                bw += b.at(1).get<double>() - b.at(0).get<double>();
            }
            const double derived = 2.0 * osr * bw;
            if (fs && std::abs(*fs - derived) > 1e-9 * derived) {
                throw Error(ErrorKind::InvalidSpec, "fs_hz and osr disagree");
            }
            fs = derived;
        }
        s.filter = filter_spec_from_json(fj, fs);
        s.fir_order = j.value("fir_order", s.fir_order);
        s.gamma = j.value("gamma", s.gamma);
        s.quantizer.levels = j.value("quantizer_levels", s.quantizer.levels);
        if (j.contains("solver")) {
            s.solver = solver_settings_from_json(j.at("solver"));
        }
        s.grid_points = j.value("grid_points", s.grid_points);
        if (j.contains("evaluation")) {
            s.evaluation = evaluation_settings_from_json(j.at("evaluation"));
        }
        s.validate();
        return s;
    });
}

json to_json(const NtfArtifact& a) {
    json j;
    if (a.is_fir()) {
        j["a"] = a.num;
    } else {
        j["num"] = a.num;
        j["den"] = a.den;
    }
    if (a.gamma) {
        j["gamma"] = *a.gamma;
    }
    if (a.sigma2_h) {
        j["sigma2_h"] = *a.sigma2_h;
    }
    if (a.certificate) {
        j["certificate"] = to_json(*a.certificate);
    }
    if (a.solver_status) {
        json s;
        s["status"] = *a.solver_status;
        if (a.solver_iterations) {
            s["iterations"] = *a.solver_iterations;
        }
        if (a.duality_gap) {
            s["duality_gap"] = *a.duality_gap;
        }
        j["solver"] = s;
    }
    return j;
}

NtfArtifact ntf_artifact_from_json(const json& j) {
    return guarded("NTF", [&] {
        NtfArtifact a;
        if (j.contains("a")) {
            a.num = j.at("a").get<std::vector<double>>();
            a.den = {1.0};
        } else {
            a.num = j.at("num").get<std::vector<double>>();
            a.den = j.value("den", std::vector<double>{1.0});
        }
        if (j.contains("gamma")) {
            a.gamma = j.at("gamma").get<double>();
        }
        if (j.contains("sigma2_h")) {
            a.sigma2_h = j.at("sigma2_h").get<double>();
        }
        if (j.contains("certificate")) {
            a.certificate = certificate_from_json(j.at("certificate"));
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            a.solver_status = s.value("status", std::string{});
            if (s.contains("iterations")) {
                a.solver_iterations = s.at("iterations").get<int>();
            }
            if (s.contains("duality_gap")) {
                a.duality_gap = s.at("duality_gap").get<double>();
            }
        }
        a.validate();
        return a;
    });
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, path.string() + ": " + e.what());
    }
}

DesignSpec load_design_spec(const std::filesystem::path& path) { return design_spec_from_json(read_json(path)); }

NtfArtifact load_ntf(const std::filesystem::path& path) { return ntf_artifact_from_json(read_json(path)); }

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        }
        out << text;
        out.flush();
        if (!out) {
            throw Error(ErrorKind::Io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorKind::Io, "cannot rename onto " + path.string() + ": " + ec.message());
    }
}

void write_json(const std::filesystem::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != header.size()) {
        throw Error(ErrorKind::Io, "CSV row width does not match the header");
    }
    rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::ostringstream out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out << (i ? "," : "") << cells[i];
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) {
        line(r);
    }
    return out.str();
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

CsvTable impulse_csv(const dsp::ImpulseResponse& h) {
    CsvTable t{{"n", "h"}, {}};
    for (std::size_t i = 0; i < h.samples.size(); ++i) {
        t.add_row({std::to_string(i), format_number(h.samples[i])});
    }
    return t;
}

CsvTable trace_csv(const modsim::ModTrace& tr) {
    CsvTable t{{"n", "w", "x", "e"}, {}};
    for (std::size_t i = 0; i < tr.output_x.size(); ++i) {
        t.add_row({std::to_string(i), format_number(tr.input_w[i]), format_number(tr.output_x[i]),
                   format_number(tr.quant_error_e[i])});
    }
    return t;
}

} // namespace ntfforge::io
