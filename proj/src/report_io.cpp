#include "tailrisk/report_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "json.hpp"
#include "tailrisk/version.hpp"

namespace tailrisk::io {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr const char* kSummaryHeader =
    "nu,alpha,true_var,is_mean,is_std,is_bias,ess,max_w,"
    "dmm_lower,dmm_upper,dmm_width,dmm_mid_bias";

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Shortest decimal string that parses back to exactly the same double;
/// used wherever an exact reload is required (config echo, manifest).
std::string exact_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) {
    throw std::runtime_error("exact_double: conversion failed");
  }
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& raw, const std::string& what) {
  const std::string s = trim(raw);
  if (s.empty()) throw std::invalid_argument(what + ": empty number");
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(what + ": trailing characters in '" + s + "'");
    }
    return v;
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument(what + ": cannot parse number '" + s + "'");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument(what + ": number out of range '" + s + "'");
  }
}

long long parse_int(const std::string& raw, const std::string& what) {
  const std::string s = trim(raw);
  if (s.empty()) throw std::invalid_argument(what + ": empty integer");
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(what + ": trailing characters in '" + s + "'");
    }
    return v;
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument(what + ": cannot parse integer '" + s + "'");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument(what + ": integer out of range '" + s + "'");
  }
}

std::uint64_t parse_uint64(const std::string& raw, const std::string& what) {
  const std::string s = trim(raw);
  if (s.empty() || s[0] == '-') {
    throw std::invalid_argument(what + ": expected a nonnegative integer");
  }
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(what + ": trailing characters in '" + s + "'");
    }
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": cannot parse integer '" + s + "'");
  }
}

std::vector<double> parse_double_list(const std::string& raw,
                                      const std::string& what) {
  std::vector<double> out;
  for (const std::string& piece : split(raw, ',')) {
    out.push_back(parse_double(piece, what));
  }
  return out;
}

std::string render_double_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += exact_double(v[i]);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

PriceSeries load_price_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open price file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty file, expected a header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split(line, ',');
  std::size_t date_col = header.size();
  std::size_t close_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    if (name == "date") date_col = i;
    if (name == "close") close_col = i;
  }
  if (date_col == header.size() || close_col == header.size()) {
    throw std::runtime_error(path.string() +
                             ": header must contain 'date' and 'close' columns");
  }

  std::vector<std::pair<std::string, double>> rows;
  std::size_t row_number = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw std::runtime_error(path.string() + ": row " +
                               std::to_string(row_number) + " has " +
                               std::to_string(fields.size()) +
                               " fields, expected " +
                               std::to_string(header.size()));
    }
    const std::string date = trim(fields[date_col]);
    if (date.empty()) {
      throw std::runtime_error(path.string() + ": row " +
                               std::to_string(row_number) + " has an empty date");
    }
    double close = 0.0;
    try {
      close = parse_double(fields[close_col], "close");
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ": row " +
                               std::to_string(row_number) + ": " + e.what());
    }
    if (!(close > 0.0) || !std::isfinite(close)) {
      throw std::runtime_error(path.string() + ": row " +
                               std::to_string(row_number) +
                               " has a non-positive close price");
    }
    rows.emplace_back(date, close);
  }
  if (rows.empty()) {
    throw std::runtime_error(path.string() + ": no data rows");
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].first == rows[i - 1].first) {
      throw std::runtime_error(path.string() + ": duplicate date " +
                               rows[i].first);
    }
  }

  PriceSeries series;
  series.dates.reserve(rows.size());
  series.closes.reserve(rows.size());
  for (const auto& [date, close] : rows) {
    series.dates.push_back(date);
    series.closes.push_back(close);
  }
  return series;
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;  // defaults, overridden key by key
  std::map<std::string, bool> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_number) +
                                  ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_number) +
                                  ": empty key or value");
    }
    if (seen[key]) {
      throw std::invalid_argument("config line " + std::to_string(line_number) +
                                  ": duplicate key '" + key + "'");
    }
    seen[key] = true;

    if (key == "base_mu") {
      cfg.base_mu = parse_double(value, key);
    } else if (key == "base_sigma") {
      cfg.base_sigma = parse_double(value, key);
    } else if (key == "nus") {
      cfg.nus = parse_double_list(value, key);
    } else if (key == "alphas") {
      cfg.alphas = parse_double_list(value, key);
    } else if (key == "n_mc") {
      cfg.n_mc = static_cast<std::size_t>(parse_uint64(value, key));
    } else if (key == "m_reps") {
      cfg.m_reps = static_cast<int>(parse_int(value, key));
    } else if (key == "t_obs") {
      cfg.t_obs = static_cast<std::size_t>(parse_uint64(value, key));
    } else if (key == "master_seed") {
      cfg.master_seed = Seed{parse_uint64(value, key)};
    } else if (key == "grid_m") {
      cfg.dmm.grid_m = static_cast<int>(parse_int(value, key));
    } else if (key == "grid_span") {
      cfg.dmm.grid_span = parse_double(value, key);
    } else if (key == "d_max") {
      cfg.dmm.d_max = static_cast<int>(parse_int(value, key));
    } else if (key == "moment_source") {
      if (value == "analytic") {
        cfg.dmm.moment_source = MomentSource::analytic_gaussian;
      } else if (value == "sample") {
        cfg.dmm.moment_source = MomentSource::nominal_sample;
      } else {
        throw std::invalid_argument(
            "config: moment_source must be 'analytic' or 'sample', got '" +
            value + "'");
      }
    } else if (key == "moment_sample_n") {
      cfg.dmm.moment_sample_n = static_cast<std::size_t>(parse_uint64(value, key));
    } else if (key == "is_tol") {
      cfg.is.tol = parse_double(value, key);
    } else if (key == "is_max_iter") {
      cfg.is.max_iter = static_cast<int>(parse_int(value, key));
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_number) +
                                  ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    // A manifest from an earlier run doubles as a config: its echo holds the
    // full effective configuration, master seed included.
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("config") || !j["config"].is_object()) {
      throw std::runtime_error(path.string() +
                               ": manifest has no 'config' object");
    }
    std::string flat;
    for (const auto& [key, value] : j["config"].items()) {
      flat += key;
      flat += " = ";
      flat += value.get<std::string>();
      flat += "\n";
    }
    return parse_config_text(flat);
  }
  return parse_config_text(text);
}

std::vector<std::pair<std::string, std::string>> config_echo(
    const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("base_mu", exact_double(cfg.base_mu));
  kv.emplace_back("base_sigma", exact_double(cfg.base_sigma));
  kv.emplace_back("nus", render_double_list(cfg.nus));
  kv.emplace_back("alphas", render_double_list(cfg.alphas));
  kv.emplace_back("n_mc", std::to_string(cfg.n_mc));
  kv.emplace_back("m_reps", std::to_string(cfg.m_reps));
  kv.emplace_back("t_obs", std::to_string(cfg.t_obs));
  kv.emplace_back("master_seed", std::to_string(cfg.master_seed.value));
  kv.emplace_back("grid_m", std::to_string(cfg.dmm.grid_m));
  kv.emplace_back("grid_span", exact_double(cfg.dmm.grid_span));
  kv.emplace_back("d_max", std::to_string(cfg.dmm.d_max));
  kv.emplace_back("moment_source",
                  cfg.dmm.moment_source == MomentSource::analytic_gaussian
                      ? "analytic"
                      : "sample");
  kv.emplace_back("moment_sample_n", std::to_string(cfg.dmm.moment_sample_n));
  kv.emplace_back("is_tol", exact_double(cfg.is.tol));
  kv.emplace_back("is_max_iter", std::to_string(cfg.is.max_iter));
  return kv;
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : config_echo(cfg)) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
  }
  return out;
}

void write_summary_csv(const SummaryTable& table, std::ostream& out) {
  out << kSummaryHeader << "\n";
  for (const CellSummary& c : table.cells) {
    out << format_number(c.nu) << ',' << format_number(c.alpha) << ','
        << format_number(c.true_var_mean) << ',' << format_number(c.is_mean)
        << ',' << format_number(c.is_std) << ',' << format_number(c.is_bias)
        << ',' << format_number(c.ess_mean) << ','
        << format_number(c.max_w_mean) << ',' << format_number(c.dmm_lower_mean)
        << ',' << format_number(c.dmm_upper_mean) << ','
        << format_number(c.dmm_width_mean) << ','
        << format_number(c.dmm_mid_bias) << "\n";
  }
}

SummaryTable read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("summary csv: missing header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSummaryHeader) {
    throw std::runtime_error("summary csv: unexpected header '" + line + "'");
  }
  SummaryTable table;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != 12) {
      throw std::runtime_error("summary csv: row " + std::to_string(row) +
                               " has " + std::to_string(fields.size()) +
                               " fields, expected 12");
    }
    CellSummary c;
    c.nu = parse_double(fields[0], "nu");
    c.alpha = parse_double(fields[1], "alpha");
    c.true_var_mean = parse_double(fields[2], "true_var");
    c.is_mean = parse_double(fields[3], "is_mean");
    c.is_std = parse_double(fields[4], "is_std");
    c.is_bias = parse_double(fields[5], "is_bias");
    c.ess_mean = parse_double(fields[6], "ess");
    c.max_w_mean = parse_double(fields[7], "max_w");
    c.dmm_lower_mean = parse_double(fields[8], "dmm_lower");
    c.dmm_upper_mean = parse_double(fields[9], "dmm_upper");
    c.dmm_width_mean = parse_double(fields[10], "dmm_width");
    c.dmm_mid_bias = parse_double(fields[11], "dmm_mid_bias");
    c.is_variance = c.is_std * c.is_std;
    c.is_mse = c.is_bias * c.is_bias + c.is_variance;
    c.sufficient = std::isfinite(c.is_mean);
    table.cells.push_back(c);
  }
  return table;
}

void write_records_ndjson(std::span<const ReplicationRecord> records,
                          std::ostream& out) {
  for (const ReplicationRecord& r : records) {
    nlohmann::ordered_json j;
    j["nu"] = r.nu;
    j["alpha"] = r.alpha;
    j["rep_index"] = r.rep_index;
    j["ok"] = r.ok;
    j["failure"] = r.failure;
    j["mu_hat"] = r.mu_hat;
    j["sigma_hat"] = r.sigma_hat;
    j["true_var"] = r.true_var;
    j["is_var"] = r.is_var;
    j["is_bracket_lo"] = r.is_bracket_lo;
    j["is_bracket_hi"] = r.is_bracket_hi;
    j["is_iterations"] = r.is_iterations;
    j["ess"] = r.ess;
    j["max_weight_share"] = r.max_weight_share;
    j["tilt_degenerate"] = r.tilt_degenerate;
    j["dmm_feasible"] = r.dmm_bracket.feasible;
    j["dmm_lower"] = r.dmm_bracket.lower;
    j["dmm_upper"] = r.dmm_bracket.upper;
    j["dmm_phase1_residual"] = r.dmm_bracket.phase1_residual;
    j["dmm_midpoint"] = r.dmm_midpoint;
    j["d_star"] = r.d_star;
    out << j.dump() << "\n";
  }
}

std::vector<ReplicationRecord> read_records_ndjson(std::istream& in) {
  std::vector<ReplicationRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("records line " + std::to_string(line_number) +
                               ": " + e.what());
    }
    ReplicationRecord r;
    r.nu = j.at("nu").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.rep_index = j.at("rep_index").get<int>();
    r.ok = j.at("ok").get<bool>();
    r.failure = j.at("failure").get<std::string>();
    r.mu_hat = j.at("mu_hat").get<double>();
    r.sigma_hat = j.at("sigma_hat").get<double>();
    r.true_var = j.at("true_var").get<double>();
    r.is_var = j.at("is_var").get<double>();
    r.is_bracket_lo = j.at("is_bracket_lo").get<double>();
    r.is_bracket_hi = j.at("is_bracket_hi").get<double>();
    r.is_iterations = j.at("is_iterations").get<int>();
    r.ess = j.at("ess").get<double>();
    r.max_weight_share = j.at("max_weight_share").get<double>();
    r.tilt_degenerate = j.at("tilt_degenerate").get<bool>();
    r.dmm_bracket.feasible = j.at("dmm_feasible").get<bool>();
    r.dmm_bracket.lower = j.at("dmm_lower").get<double>();
    r.dmm_bracket.upper = j.at("dmm_upper").get<double>();
    r.dmm_bracket.phase1_residual = j.at("dmm_phase1_residual").get<double>();
    r.dmm_midpoint = j.at("dmm_midpoint").get<double>();
    r.d_star = j.at("d_star").get<int>();
    r.dmm_bracket.alpha = r.alpha;
    r.dmm_bracket.moment_order = r.d_star;
    records.push_back(std::move(r));
  }
  return records;
}

void write_manifest(const RunManifest& manifest, std::ostream& out) {
  nlohmann::ordered_json j;
  j["version"] = manifest.version;
  j["master_seed"] = manifest.master_seed;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [key, value] : manifest.config_echo) cfg[key] = value;
  j["config"] = cfg;
  j["outputs"] = manifest.outputs;
  j["duration_seconds"] = manifest.duration_seconds;
  out << j.dump(2) << "\n";
}

RunManifest read_manifest(std::istream& in) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("manifest: ") + e.what());
  }
  RunManifest m;
  m.version = j.at("version").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  for (const auto& [key, value] : j.at("config").items()) {
    m.config_echo.emplace_back(key, value.get<std::string>());
  }
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  m.duration_seconds = j.at("duration_seconds").get<double>();
  return m;
}

namespace {

void write_file(const std::filesystem::path& dir, const std::string& name,
                const std::string& body, std::vector<std::string>* written) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot create " + (dir / name).string());
  }
  out << body;
  if (written != nullptr) written->push_back(name);
}

}  // namespace

void write_figure_files(const FigureBundle& bundle,
                        const std::filesystem::path& dir,
                        std::vector<std::string>* written) {
  std::filesystem::create_directories(dir);

  {
    const auto& b = bundle.bracketing;
    std::string body;
    body += "# nu=" + format_number(b.nu) + " alpha=" + format_number(b.alpha) +
            " moment_order=" + std::to_string(b.moment_order) + "\n";
    body += "# dmm_lower=" + format_number(b.dmm_lower) +
            " dmm_upper=" + format_number(b.dmm_upper) +
            " mc_var_ref=" + format_number(b.mc_var_ref) + "\n";
    body += "loss,ecdf\n";
    for (std::size_t i = 0; i < b.losses_sorted.size(); ++i) {
      body += format_number(b.losses_sorted[i]);
      body += ",";
      body += format_number(b.ecdf[i]);
      body += "\n";
    }
    write_file(dir, "figure1_dmm_bracketing.csv", body, written);
  }

  {
    const auto& s = bundle.sensitivity;
    std::string body;
    body += "# nu=" + format_number(s.nu) + " alpha=" + format_number(s.alpha) +
            " d_star=" + std::to_string(s.d_star) + "\n";
    body += "order,lower,upper,feasible\n";
    for (std::size_t i = 0; i < s.orders.size(); ++i) {
      body += std::to_string(s.orders[i]);
      body += ",";
      body += format_number(s.lower[i]);
      body += ",";
      body += format_number(s.upper[i]);
      body += ",";
      body += std::to_string(s.feasible[i]);
      body += "\n";
    }
    write_file(dir, "figure2_dmm_sensitivity.csv", body, written);
  }

  const auto cell_rows = [&](const std::string& header, auto&& row) {
    std::string body = header + "\n";
    for (const FigureBundle::CellPoint& p : bundle.cells) {
      body += row(p);
      body += "\n";
    }
    return body;
  };

  write_file(dir, "figure3_is_calibration.csv",
             cell_rows("nu,alpha,true_var,is_mean",
                       [](const FigureBundle::CellPoint& p) {
                         return format_number(p.nu) + "," +
                                format_number(p.alpha) + "," +
                                format_number(p.true_var_mean) + "," +
                                format_number(p.is_mean);
                       }),
             written);
  write_file(dir, "figure4_is_bias_vs_nu.csv",
             cell_rows("alpha,nu,is_bias",
                       [](const FigureBundle::CellPoint& p) {
                         return format_number(p.alpha) + "," +
                                format_number(p.nu) + "," +
                                format_number(p.is_bias);
                       }),
             written);
  write_file(dir, "figure5_is_std_vs_nu.csv",
             cell_rows("alpha,nu,is_std",
                       [](const FigureBundle::CellPoint& p) {
                         return format_number(p.alpha) + "," +
                                format_number(p.nu) + "," +
                                format_number(p.is_std);
                       }),
             written);
  write_file(dir, "figure6_is_stability.csv",
             cell_rows("nu,alpha,ess_mean,max_w_mean",
                       [](const FigureBundle::CellPoint& p) {
                         return format_number(p.nu) + "," +
                                format_number(p.alpha) + "," +
                                format_number(p.ess_mean) + "," +
                                format_number(p.max_w_mean);
                       }),
             written);
  write_file(dir, "figure7_bias_vs_ess.csv",
             cell_rows("nu,alpha,ess_mean,abs_bias",
                       [](const FigureBundle::CellPoint& p) {
                         return format_number(p.nu) + "," +
                                format_number(p.alpha) + "," +
                                format_number(p.ess_mean) + "," +
                                format_number(std::fabs(p.is_bias));
                       }),
             written);
}

}  // namespace tailrisk::io
