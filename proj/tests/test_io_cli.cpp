#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tailrisk/cli.hpp"
#include "tailrisk/report_io.hpp"

using namespace tailrisk;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("tailrisk_test_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kSmallConfig =
    "nus = 5\n"
    "alphas = 0.99\n"
    "n_mc = 1500\n"
    "m_reps = 3\n"
    "t_obs = 300\n"
    "master_seed = 11\n"
    "grid_m = 40\n"
    "d_max = 3\n"
    "moment_source = analytic\n";

}  // namespace

TEST_CASE("format_number uses ten significant digits") {
  CHECK(io::format_number(5.0) == "5");
  CHECK(io::format_number(0.123456789012345) == "0.123456789");
  CHECK(io::format_number(-0.0029) == "-0.0029");
  CHECK(io::format_number(12345678901234.0) == "1.23456789e+13");
  CHECK(io::format_number(12345678912345.0) == "1.234567891e+13");
}

TEST_CASE("load_price_csv parses, sorts and validates") {
  TempDir dir("prices");
  const fs::path csv = dir.path / "prices.csv";

  write_text(csv,
             "date,close,volume\n"
             "2024-01-03,101.5,9\n"
             "2024-01-02,100.0,7\n"
             "2024-01-04,99.25,8\n");
  const PriceSeries s = io::load_price_csv(csv);
  REQUIRE(s.dates.size() == 3);
  CHECK(s.dates[0] == "2024-01-02");
  CHECK(s.closes[0] == 100.0);
  CHECK(s.dates[2] == "2024-01-04");
  CHECK(s.closes[2] == 99.25);

  write_text(csv, "date,close\n2024-01-02,100\n2024-01-03,0\n");
  CHECK_THROWS_WITH_AS(io::load_price_csv(csv),
                       doctest::Contains("row 3"), std::runtime_error);

  write_text(csv, "date,close\n2024-01-02,100\n2024-01-02,101\n");
  CHECK_THROWS_WITH_AS(io::load_price_csv(csv),
                       doctest::Contains("duplicate date"), std::runtime_error);

  write_text(csv, "date,close\n2024-01-02,abc\n");
  CHECK_THROWS_WITH_AS(io::load_price_csv(csv), doctest::Contains("row 2"),
                       std::runtime_error);

  write_text(csv, "day,price\n2024-01-02,100\n");
  CHECK_THROWS_AS(io::load_price_csv(csv), std::runtime_error);

  write_text(csv, "date,close\n");
  CHECK_THROWS_AS(io::load_price_csv(csv), std::runtime_error);

  CHECK_THROWS_AS(io::load_price_csv(dir.path / "missing.csv"),
                  std::runtime_error);
}

TEST_CASE("config text round trip is exact") {
  ExperimentConfig cfg;
  cfg.base_mu = 0.1 + 0.2;  // not representable as a short decimal
  cfg.base_sigma = 0.013;
  cfg.nus = {5.0, 7.5};
  cfg.alphas = {0.99};
  cfg.n_mc = 123;
  cfg.m_reps = 7;
  cfg.t_obs = 99;
  cfg.master_seed = Seed{18446744073709551615ULL};
  cfg.dmm.grid_m = 33;
  cfg.dmm.grid_span = 6.25;
  cfg.dmm.d_max = 5;
  cfg.dmm.moment_source = MomentSource::analytic_gaussian;
  cfg.dmm.moment_sample_n = 777;
  cfg.is.tol = 3e-7;
  cfg.is.max_iter = 55;

  const ExperimentConfig back = io::parse_config_text(io::render_config(cfg));
  CHECK(back.base_mu == cfg.base_mu);
  CHECK(back.base_sigma == cfg.base_sigma);
  CHECK(back.nus == cfg.nus);
  CHECK(back.alphas == cfg.alphas);
  CHECK(back.n_mc == cfg.n_mc);
  CHECK(back.m_reps == cfg.m_reps);
  CHECK(back.t_obs == cfg.t_obs);
  CHECK(back.master_seed.value == cfg.master_seed.value);
  CHECK(back.dmm.grid_m == cfg.dmm.grid_m);
  CHECK(back.dmm.grid_span == cfg.dmm.grid_span);
  CHECK(back.dmm.d_max == cfg.dmm.d_max);
  CHECK(back.dmm.moment_source == cfg.dmm.moment_source);
  CHECK(back.dmm.moment_sample_n == cfg.dmm.moment_sample_n);
  CHECK(back.is.tol == cfg.is.tol);
  CHECK(back.is.max_iter == cfg.is.max_iter);
}

TEST_CASE("config parser rejects drift") {
  CHECK_THROWS_WITH_AS(io::parse_config_text("typo_key = 3\n"),
                       doctest::Contains("unknown key"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(io::parse_config_text("n_mc = 5\nn_mc = 6\n"),
                       doctest::Contains("duplicate key"),
                       std::invalid_argument);
  CHECK_THROWS_AS(io::parse_config_text("n_mc\n"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_config_text("base_mu = zero\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(io::parse_config_text("moment_source = guess\n"),
                  std::invalid_argument);
  // Comments and blank lines are fine; defaults survive an empty config.
  const ExperimentConfig cfg =
      io::parse_config_text("# comment only\n\n  \nn_mc = 4242 # trailing\n");
  CHECK(cfg.n_mc == 4242);
  CHECK(cfg.m_reps == 100);
}

TEST_CASE("load_config accepts both flat text and a manifest") {
  TempDir dir("config");
  ExperimentConfig cfg;
  cfg.n_mc = 2718;
  cfg.master_seed = Seed{281828};

  const fs::path flat = dir.path / "run.cfg";
  write_text(flat, io::render_config(cfg));
  CHECK(io::load_config(flat).n_mc == 2718);

  io::RunManifest manifest;
  manifest.version = "0.1.0";
  manifest.master_seed = cfg.master_seed.value;
  manifest.config_echo = io::config_echo(cfg);
  manifest.outputs = {"summary.csv"};
  manifest.duration_seconds = 1.5;
  const fs::path mpath = dir.path / "manifest.json";
  {
    std::ofstream out(mpath, std::ios::binary);
    io::write_manifest(manifest, out);
  }
  const ExperimentConfig from_manifest = io::load_config(mpath);
  CHECK(from_manifest.n_mc == 2718);
  CHECK(from_manifest.master_seed.value == 281828);
}

TEST_CASE("summary csv write/read is a fixpoint") {
  SummaryTable table;
  CellSummary a;
  a.nu = 5.0;
  a.alpha = 0.99;
  a.sufficient = true;
  a.true_var_mean = 0.02812345678;
  a.is_mean = 0.02512345678;
  a.is_std = 0.001987654321;
  a.is_bias = -0.003;
  a.is_variance = a.is_std * a.is_std;
  a.is_mse = a.is_bias * a.is_bias + a.is_variance;
  a.ess_mean = 154.2;
  a.max_w_mean = 0.056;
  a.dmm_lower_mean = 0.019;
  a.dmm_upper_mean = 0.031;
  a.dmm_width_mean = 0.012;
  a.dmm_mid_bias = -0.0031;
  CellSummary b = a;
  b.alpha = 0.995;
  b.sufficient = false;
  b.true_var_mean = b.is_mean = b.is_std = b.is_bias = NAN;
  b.ess_mean = b.max_w_mean = NAN;
  b.dmm_lower_mean = b.dmm_upper_mean = b.dmm_width_mean = b.dmm_mid_bias = NAN;
  table.cells = {a, b};

  std::ostringstream first;
  io::write_summary_csv(table, first);
  std::istringstream back(first.str());
  const SummaryTable again = io::read_summary_csv(back);
  REQUIRE(again.cells.size() == 2);
  CHECK(again.cells[0].sufficient);
  CHECK_FALSE(again.cells[1].sufficient);
  CHECK(again.cells[0].is_bias == doctest::Approx(-0.003).epsilon(1e-9));
  CHECK(again.cells[0].is_mse ==
        doctest::Approx(a.is_mse).epsilon(1e-8));
  CHECK(std::isnan(again.cells[1].is_mean));

  std::ostringstream second;
  io::write_summary_csv(again, second);
  CHECK(first.str() == second.str());

  std::istringstream bad("wrong,header\n");
  CHECK_THROWS_AS(io::read_summary_csv(bad), std::runtime_error);
}

TEST_CASE("records ndjson round trip preserves every field") {
  std::vector<ReplicationRecord> recs(2);
  recs[0].nu = 5.0;
  recs[0].alpha = 0.99;
  recs[0].rep_index = 3;
  recs[0].ok = true;
  recs[0].mu_hat = 0.00051234;
  recs[0].sigma_hat = 0.01099;
  recs[0].true_var = 0.0281;
  recs[0].is_var = 0.0252;
  recs[0].is_bracket_lo = 0.02519999;
  recs[0].is_bracket_hi = 0.0252001;
  recs[0].is_iterations = 17;
  recs[0].ess = 154.0;
  recs[0].max_weight_share = 0.056;
  recs[0].dmm_bracket.feasible = true;
  recs[0].dmm_bracket.lower = 0.019;
  recs[0].dmm_bracket.upper = 0.031;
  recs[0].dmm_bracket.alpha = 0.99;
  recs[0].dmm_bracket.moment_order = 7;
  recs[0].dmm_midpoint = 0.025;
  recs[0].d_star = 7;
  recs[1].nu = 7.0;
  recs[1].alpha = 0.995;
  recs[1].rep_index = 0;
  recs[1].ok = false;
  recs[1].failure = "synthetic failure, with punctuation: [0.1, 0.2]";

  std::ostringstream out;
  io::write_records_ndjson(recs, out);
  std::istringstream in(out.str());
  const std::vector<ReplicationRecord> back = io::read_records_ndjson(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].nu == 5.0);
  CHECK(back[0].rep_index == 3);
  CHECK(back[0].ok);
  CHECK(back[0].mu_hat == recs[0].mu_hat);
  CHECK(back[0].is_var == recs[0].is_var);
  CHECK(back[0].is_iterations == 17);
  CHECK(back[0].ess == 154.0);
  CHECK(back[0].dmm_bracket.feasible);
  CHECK(back[0].dmm_bracket.lower == 0.019);
  CHECK(back[0].dmm_bracket.moment_order == 7);
  CHECK(back[0].d_star == 7);
  CHECK_FALSE(back[1].ok);
  CHECK(back[1].failure == recs[1].failure);

  std::istringstream junk("not json\n");
  CHECK_THROWS_AS(io::read_records_ndjson(junk), std::runtime_error);
}

TEST_CASE("manifest round trip") {
  io::RunManifest m;
  m.version = "0.1.0";
  m.master_seed = 424242;
  m.config_echo = {{"n_mc", "10000"}, {"alphas", "0.99,0.995"}};
  m.outputs = {"summary.csv", "records.ndjson"};
  m.duration_seconds = 12.25;

  std::ostringstream out;
  io::write_manifest(m, out);
  std::istringstream in(out.str());
  const io::RunManifest back = io::read_manifest(in);
  CHECK(back.version == m.version);
  CHECK(back.master_seed == m.master_seed);
  CHECK(back.config_echo == m.config_echo);
  CHECK(back.outputs == m.outputs);
  CHECK(back.duration_seconds == m.duration_seconds);
}

TEST_CASE("cli usage errors exit 1 and help exits 0") {
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"calibrate", "--help"}).code == 0);
  CHECK(run_cli({"--version"}).code == 0);
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"frobnicate"}).code == 1);
  CHECK(run_cli({"calibrate"}).code == 1);  // missing --prices
  CHECK(run_cli({"calibrate", "--prices", "/no/such/file.csv"}).code == 1);
  CHECK(run_cli({"is-var", "--bogus-flag"}).code == 1);
  CHECK(run_cli({"simulate", "--config", "/no/such/config"}).code == 1);
  const CliRun bad = run_cli({"frobnicate"});
  CHECK_FALSE(bad.err.empty());
}

TEST_CASE("calibrate prints the fit and rejects degenerate inputs") {
  TempDir dir("calib");
  const fs::path csv = dir.path / "p.csv";
  write_text(csv,
             "date,close\n"
             "2024-01-02,100\n"
             "2024-01-03,101\n"
             "2024-01-04,99\n"
             "2024-01-05,102\n");
  const CliRun r = run_cli({"calibrate", "--prices", csv.string(), "--alpha",
                            "0.99", "--out-dir", (dir.path / "rep").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("mu_hat = ") != std::string::npos);
  CHECK(r.out.find("sigma_hat = ") != std::string::npos);
  CHECK(r.out.find("t = 3") != std::string::npos);
  CHECK(r.out.find("gaussian_var(alpha=0.99) = ") != std::string::npos);
  CHECK(read_text(dir.path / "rep" / "calibrate.txt") == r.out);

  // Two prices give a single return: degenerate, runtime failure.
  write_text(csv, "date,close\n2024-01-02,100\n2024-01-03,101\n");
  const CliRun bad = run_cli({"calibrate", "--prices", csv.string()});
  CHECK(bad.code == 2);
  CHECK_FALSE(bad.err.empty());
}

TEST_CASE("is-var and dmm-bounds run deterministically") {
  const std::vector<std::string> is_args{"is-var", "--mu",   "0",    "--sigma",
                                         "0.01",   "--alpha", "0.99", "--n",
                                         "20000",  "--seed", "42"};
  const CliRun a = run_cli(is_args);
  const CliRun b = run_cli(is_args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("var = 0.023") != std::string::npos);
  CHECK(a.out.find("ess = ") != std::string::npos);
  CHECK(a.out.find("tilt_degenerate = 0") != std::string::npos);

  const CliRun d = run_cli({"dmm-bounds", "--mu", "0.0005", "--sigma", "0.011",
                            "--alpha", "0.99", "--d-max", "3", "--grid-m", "40",
                            "--moments", "analytic"});
  CHECK(d.code == 0);
  CHECK(d.out.find("d=1 lower=") != std::string::npos);
  CHECK(d.out.find("d=3 lower=") != std::string::npos);
  CHECK(d.out.find("\nd_star=3\n") != std::string::npos);

  const CliRun bad = run_cli({"dmm-bounds", "--moments", "nonsense"});
  CHECK(bad.code == 1);
}

TEST_CASE("simulate writes a complete, reproducible report directory") {
  TempDir dir("sim");
  const fs::path cfg_path = dir.path / "run.cfg";
  write_text(cfg_path, kSmallConfig);

  const fs::path out1 = dir.path / "out1";
  const CliRun r1 = run_cli({"simulate", "--config", cfg_path.string(),
                             "--out-dir", out1.string()});
  REQUIRE(r1.code == 0);
  CHECK(fs::exists(out1 / "summary.csv"));
  CHECK(fs::exists(out1 / "records.ndjson"));
  CHECK(fs::exists(out1 / "manifest.json"));
  CHECK(fs::exists(out1 / "figure1_dmm_bracketing.csv"));
  CHECK(fs::exists(out1 / "figure7_bias_vs_ess.csv"));

  // Same config, fresh directory: byte-identical reports.
  const fs::path out2 = dir.path / "out2";
  const CliRun r2 = run_cli({"simulate", "--config", cfg_path.string(),
                             "--out-dir", out2.string()});
  REQUIRE(r2.code == 0);
  CHECK(read_text(out1 / "summary.csv") == read_text(out2 / "summary.csv"));
  CHECK(read_text(out1 / "records.ndjson") ==
        read_text(out2 / "records.ndjson"));

  // The manifest alone reproduces the run.
  const fs::path out3 = dir.path / "out3";
  const CliRun r3 = run_cli({"simulate", "--config",
                             (out1 / "manifest.json").string(), "--out-dir",
                             out3.string()});
  REQUIRE(r3.code == 0);
  CHECK(read_text(out1 / "summary.csv") == read_text(out3 / "summary.csv"));

  // Every listed output exists.
  std::ifstream min(out1 / "manifest.json");
  const io::RunManifest manifest = io::read_manifest(min);
  for (const std::string& name : manifest.outputs) {
    CHECK(fs::exists(out1 / name));
  }
  CHECK(manifest.master_seed == 11);

  // A seed override changes the reports.
  const fs::path out4 = dir.path / "out4";
  const CliRun r4 = run_cli({"simulate", "--config", cfg_path.string(),
                             "--out-dir", out4.string(), "--seed", "99"});
  REQUIRE(r4.code == 0);
  CHECK(read_text(out1 / "summary.csv") != read_text(out4 / "summary.csv"));

  // figures rebuilds byte-identical figure files from stored records.
  const std::string fig1 = read_text(out1 / "figure2_dmm_sensitivity.csv");
  fs::remove(out1 / "figure2_dmm_sensitivity.csv");
  const CliRun rf = run_cli({"figures", "--in-dir", out1.string()});
  REQUIRE(rf.code == 0);
  CHECK(read_text(out1 / "figure2_dmm_sensitivity.csv") == fig1);
}

TEST_CASE("failed simulate leaves no partial outputs behind") {
  TempDir dir("simfail");
  const fs::path cfg_path = dir.path / "run.cfg";
  write_text(cfg_path, kSmallConfig);
  const fs::path out = dir.path / "out";
  // Obstruct the manifest path with a directory: the last write fails after
  // summary/records/figures already exist, and all of them must be removed.
  fs::create_directories(out / "manifest.json");
  const CliRun r = run_cli({"simulate", "--config", cfg_path.string(),
                            "--out-dir", out.string()});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  CHECK_FALSE(fs::exists(out / "summary.csv"));
  CHECK_FALSE(fs::exists(out / "records.ndjson"));
  CHECK_FALSE(fs::exists(out / "figure1_dmm_bracketing.csv"));
}

TEST_CASE("figure files have the documented layout") {
  TempDir dir("fig");
  FigureBundle fb;
  fb.bracketing.nu = 5.0;
  fb.bracketing.alpha = 0.99;
  fb.bracketing.moment_order = 4;
  fb.bracketing.losses_sorted = {-0.01, 0.0, 0.02};
  fb.bracketing.ecdf = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  fb.bracketing.dmm_lower = 0.01;
  fb.bracketing.dmm_upper = 0.03;
  fb.bracketing.mc_var_ref = 0.02;
  fb.sensitivity.nu = 5.0;
  fb.sensitivity.alpha = 0.99;
  fb.sensitivity.orders = {1, 2};
  fb.sensitivity.lower = {0.01, 0.015};
  fb.sensitivity.upper = {0.04, 0.03};
  fb.sensitivity.feasible = {1, 1};
  fb.sensitivity.d_star = 2;
  FigureBundle::CellPoint p;
  p.nu = 5.0;
  p.alpha = 0.99;
  p.true_var_mean = 0.0281;
  p.is_mean = 0.0252;
  p.is_bias = -0.0029;
  p.is_std = 0.0018;
  p.ess_mean = 154.0;
  p.max_w_mean = 0.056;
  fb.cells = {p};

  std::vector<std::string> written;
  io::write_figure_files(fb, dir.path, &written);
  CHECK(written.size() == 7);

  const std::string f1 = read_text(dir.path / "figure1_dmm_bracketing.csv");
  CHECK(f1.find("loss,ecdf\n") != std::string::npos);
  CHECK(f1.find("# nu=5 alpha=0.99 moment_order=4\n") != std::string::npos);

  const std::string f2 = read_text(dir.path / "figure2_dmm_sensitivity.csv");
  CHECK(f2.find("order,lower,upper,feasible\n") != std::string::npos);
  CHECK(f2.find("d_star=2") != std::string::npos);

  const std::string f3 = read_text(dir.path / "figure3_is_calibration.csv");
  CHECK(f3.find("nu,alpha,true_var,is_mean\n") != std::string::npos);
  CHECK(f3.find("5,0.99,0.0281,0.0252\n") != std::string::npos);

  const std::string f7 = read_text(dir.path / "figure7_bias_vs_ess.csv");
  CHECK(f7.find("nu,alpha,ess_mean,abs_bias\n") != std::string::npos);
  CHECK(f7.find("5,0.99,154,0.0029\n") != std::string::npos);
}
