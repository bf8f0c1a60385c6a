#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailrisk/calibration.hpp"
#include "tailrisk/experiment.hpp"

namespace tailrisk::io {

/// Reproducibility metadata written next to the report files. The config
/// echo plus master seed is sufficient to re-run the experiment and obtain
/// byte-identical reports.
struct RunManifest {
  std::string version;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<std::string> outputs;  // report files, not the manifest itself
  double duration_seconds = 0.0;
};

/// Report numbers are serialized with 10 significant digits: stable on
/// re-read far below every test tolerance, and byte-stable across runs.
std::string format_number(double x);

/// Parse columns `date` (ISO-8601) and `close` (positive decimal) from a
/// header-carrying CSV. Rows are sorted by date; duplicate dates, bad
/// numbers, and non-positive prices are rejected with the offending row
/// number in the message.
PriceSeries load_price_csv(const std::filesystem::path& path);

/// Flat key = value configuration text ('#' starts a comment). Unknown or
/// duplicate keys are errors so config drift cannot pass silently.
ExperimentConfig parse_config_text(const std::string& text);

/// Load a config from either the flat key-value schema or a manifest JSON
/// written by an earlier run (detected by a leading '{').
ExperimentConfig load_config(const std::filesystem::path& path);

/// Render the full effective config in the flat key-value schema, with
/// enough digits that a reload reproduces every field exactly.
std::vector<std::pair<std::string, std::string>> config_echo(
    const ExperimentConfig& cfg);
std::string render_config(const ExperimentConfig& cfg);

void write_summary_csv(const SummaryTable& table, std::ostream& out);
SummaryTable read_summary_csv(std::istream& in);

void write_records_ndjson(std::span<const ReplicationRecord> records,
                          std::ostream& out);
std::vector<ReplicationRecord> read_records_ndjson(std::istream& in);

void write_manifest(const RunManifest& manifest, std::ostream& out);
RunManifest read_manifest(std::istream& in);

/// Write figure_*.csv files into dir; appends each created name to
/// `written` when non-null.
void write_figure_files(const FigureBundle& bundle,
                        const std::filesystem::path& dir,
                        std::vector<std::string>* written);

}  // namespace tailrisk::io
