#pragma once

#include "ntfforge/design.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ntfforge::io {

using nlohmann::json;

[[nodiscard]] json to_json(const dsp::FilterSpec& spec);
/// `default_fs` is used when the object carries no "fs_hz".
[[nodiscard]] dsp::FilterSpec filter_spec_from_json(const json& j, std::optional<double> default_fs = {});

[[nodiscard]] json to_json(const sdp::SolverSettings& s);
[[nodiscard]] sdp::SolverSettings solver_settings_from_json(const json& j);

[[nodiscard]] json to_json(const kyp::BoundedRealCertificate& c);
[[nodiscard]] kyp::BoundedRealCertificate certificate_from_json(const json& j);

[[nodiscard]] json to_json(const EvaluationSettings& e);
[[nodiscard]] EvaluationSettings evaluation_settings_from_json(const json& j);

/// Sample rate from "fs_hz", or from "osr" as fs = 2 osr B with B the summed
/// band width of the filter bands.
[[nodiscard]] json to_json(const DesignSpec& spec);
[[nodiscard]] DesignSpec design_spec_from_json(const json& j);

/// {"a": [...]} for FIR designs, {"num": [...], "den": [...]} for rational ones.
[[nodiscard]] json to_json(const NtfArtifact& a);
[[nodiscard]] NtfArtifact ntf_artifact_from_json(const json& j);

[[nodiscard]] json read_json(const std::filesystem::path& path);
[[nodiscard]] DesignSpec load_design_spec(const std::filesystem::path& path);
[[nodiscard]] NtfArtifact load_ntf(const std::filesystem::path& path);

/// Whole-file atomic write: temporary sibling, then rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const json& j);

/// Comma-separated table with a header row; numbers use round-trip precision.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    [[nodiscard]] std::string str() const;
};

[[nodiscard]] std::string format_number(double v);

[[nodiscard]] CsvTable impulse_csv(const dsp::ImpulseResponse& h);
[[nodiscard]] CsvTable trace_csv(const modsim::ModTrace& t);

} // namespace ntfforge::io
