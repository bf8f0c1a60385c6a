#include "tailrisk/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "CLI11.hpp"
#include "tailrisk/calibration.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/experiment.hpp"
#include "tailrisk/importance_sampling.hpp"
#include "tailrisk/moment_bounds.hpp"
#include "tailrisk/report_io.hpp"
#include "tailrisk/truth.hpp"
#include "tailrisk/version.hpp"

namespace tailrisk::cli {
namespace {

namespace fs = std::filesystem;
using io::format_number;

/// Files created by the running command. On failure everything registered
/// here is deleted, so a failed run leaves no partial outputs behind.
class OutputTracker {
 public:
  void add(const fs::path& p) { created_.push_back(p); }

  void remove_all() noexcept {
    for (const fs::path& p : created_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    created_.clear();
  }

 private:
  std::vector<fs::path> created_;
};

/// Write `body` into dir/name and register the file with the tracker.
void emit_text(const fs::path& dir, const std::string& name,
               const std::string& body, OutputTracker& tracker,
               std::vector<std::string>* listed = nullptr) {
  fs::create_directories(dir);
  const fs::path target = dir / name;
  tracker.add(target);
  std::ofstream out(target, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot create " + target.string());
  }
  out << body;
  out.flush();
  if (!out) {
    throw std::runtime_error("failed while writing " + target.string());
  }
  if (listed != nullptr) listed->push_back(name);
}

NominalModel resolve_model(const std::string& prices, double mu, double sigma) {
  if (!prices.empty()) {
    const PriceSeries series = io::load_price_csv(prices);
    return fit_gaussian_mle(log_returns(series));
  }
  return NominalModel(mu, sigma);
}

struct CalibrateArgs {
  std::string prices;
  double alpha = 0.99;
  std::string out_dir;
};

int run_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const PriceSeries series = io::load_price_csv(a.prices);
  const ReturnSeries returns = log_returns(series);
  const NominalModel model = fit_gaussian_mle(returns);

  std::string body;
  body += "mu_hat = " + format_number(model.mu_hat) + "\n";
  body += "sigma_hat = " + format_number(model.sigma_hat) + "\n";
  body += "t = " + std::to_string(model.sample_size) + "\n";
  body += "gaussian_var(alpha=" + format_number(a.alpha) +
          ") = " + format_number(gaussian_var(model, a.alpha)) + "\n";
  out << body;

  if (!a.out_dir.empty()) {
    OutputTracker tracker;
    try {
      emit_text(a.out_dir, "calibrate.txt", body, tracker);
    } catch (...) {
      tracker.remove_all();
      throw;
    }
  }
  return 0;
}

struct IsVarArgs {
  std::string prices;
  double mu = 0.0005;
  double sigma = 0.011;
  double alpha = 0.99;
  std::uint64_t n = 10000;
  std::uint64_t seed = 42;
  double tol = 1e-6;
  int max_iter = 100;
  std::string out_dir;
};

int run_is_var(const IsVarArgs& a, std::ostream& out) {
  const NominalModel model = resolve_model(a.prices, a.mu, a.sigma);
  const ISVarResult r = solve_var_bisection(model, a.alpha, a.n, Seed{a.seed},
                                            a.tol, a.max_iter);

  std::string body;
  body += "var = " + format_number(r.var_estimate) + "\n";
  body += "bracket_lo = " + format_number(r.bracket_lo) + "\n";
  body += "bracket_hi = " + format_number(r.bracket_hi) + "\n";
  body += "iterations = " + std::to_string(r.iterations) + "\n";
  body += "ess = " + format_number(r.diagnostics.ess) + "\n";
  body += "max_weight_share = " + format_number(r.diagnostics.max_weight_share) +
          "\n";
  body += "tilt_degenerate = " + std::string(r.tilt_degenerate ? "1" : "0") +
          "\n";
  body += "n = " + std::to_string(r.n_samples) + "\n";
  out << body;

  if (!a.out_dir.empty()) {
    OutputTracker tracker;
    try {
      emit_text(a.out_dir, "is_var.txt", body, tracker);
    } catch (...) {
      tracker.remove_all();
      throw;
    }
  }
  return 0;
}

struct DmmBoundsArgs {
  std::string prices;
  double mu = 0.0005;
  double sigma = 0.011;
  double alpha = 0.99;
  int d_max = 8;
  int grid_m = 200;
  double span = 8.0;
  std::string moments = "sample";
  std::uint64_t sample_n = 100000;
  std::uint64_t seed = 42;
  std::string out_dir;
};

int run_dmm_bounds(const DmmBoundsArgs& a, std::ostream& out) {
  const NominalModel model = resolve_model(a.prices, a.mu, a.sigma);
  const LossGrid grid = build_grid(model, a.grid_m, a.span);

  MomentVector moments;
  if (a.moments == "analytic") {
    moments = analytic_gaussian_moments(model, a.d_max);
  } else if (a.moments == "sample") {
    const std::vector<double> rs =
        sample_normal(NormalParams(model.mu_hat, model.sigma_hat), a.sample_n,
                      Seed{a.seed});
    std::vector<double> losses(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) losses[i] = -rs[i];
    moments = raw_moments(losses, a.d_max);
  } else {
    throw CLI::ValidationError("--moments must be 'analytic' or 'sample'");
  }

  const std::vector<VarBracket> sweep =
      moment_sweep(grid, moments, a.alpha, a.d_max);
  std::string body;
  int d_star = 0;
  for (const VarBracket& b : sweep) {
    if (b.feasible) {
      d_star = b.moment_order;
      body += "d=" + std::to_string(b.moment_order) +
              " lower=" + format_number(b.lower) +
              " upper=" + format_number(b.upper) +
              " width=" + format_number(b.upper - b.lower) + "\n";
    } else {
      body += "d=" + std::to_string(b.moment_order) +
              " infeasible phase1_residual=" +
              format_number(b.phase1_residual) + "\n";
    }
  }
  body += "d_star=" + std::to_string(d_star) + "\n";
  out << body;

  if (!a.out_dir.empty()) {
    OutputTracker tracker;
    try {
      emit_text(a.out_dir, "dmm_bounds.txt", body, tracker);
    } catch (...) {
      tracker.remove_all();
      throw;
    }
  }
  return 0;
}

struct SimulateArgs {
  std::string config;
  bool seed_given = false;
  std::uint64_t seed = 42;
  std::string out_dir = "out";
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  ExperimentConfig cfg;
  if (!a.config.empty()) cfg = io::load_config(a.config);
  if (a.seed_given) cfg.master_seed = Seed{a.seed};
  cfg.validate();

  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult result = run_experiment(cfg);
  const FigureBundle bundle =
      emit_figure_data(cfg, result.table, result.records);
  const auto t1 = std::chrono::steady_clock::now();

  OutputTracker tracker;
  try {
    fs::create_directories(a.out_dir);
    io::RunManifest manifest;
    manifest.version = kVersion;
    manifest.master_seed = cfg.master_seed.value;
    manifest.config_echo = io::config_echo(cfg);
    manifest.duration_seconds =
        std::chrono::duration<double>(t1 - t0).count();

    {
      std::ostringstream s;
      io::write_summary_csv(result.table, s);
      emit_text(a.out_dir, "summary.csv", s.str(), tracker, &manifest.outputs);
    }
    {
      std::ostringstream s;
      io::write_records_ndjson(result.records, s);
      emit_text(a.out_dir, "records.ndjson", s.str(), tracker,
                &manifest.outputs);
    }
    {
      std::vector<std::string> figure_names;
      io::write_figure_files(bundle, a.out_dir, &figure_names);
      for (const std::string& name : figure_names) {
        tracker.add(fs::path(a.out_dir) / name);
        manifest.outputs.push_back(name);
      }
    }
    {
      std::ostringstream s;
      io::write_manifest(manifest, s);
      emit_text(a.out_dir, "manifest.json", s.str(), tracker);
    }

    std::ostringstream table_text;
    io::write_summary_csv(result.table, table_text);
    out << table_text.str();
    out << "wrote " << manifest.outputs.size() + 1 << " files to " << a.out_dir
        << "\n";
  } catch (...) {
    tracker.remove_all();
    throw;
  }
  return 0;
}

struct FiguresArgs {
  std::string in_dir = "out";
  std::string out_dir;
};

int run_figures(const FiguresArgs& a, std::ostream& out) {
  const fs::path in_dir(a.in_dir);
  const fs::path out_dir(a.out_dir.empty() ? a.in_dir : a.out_dir);

  std::ifstream manifest_in(in_dir / "manifest.json");
  if (!manifest_in) {
    throw std::runtime_error("cannot open " +
                             (in_dir / "manifest.json").string());
  }
  const io::RunManifest manifest = io::read_manifest(manifest_in);
  std::string flat;
  for (const auto& [key, value] : manifest.config_echo) {
    flat += key + " = " + value + "\n";
  }
  const ExperimentConfig cfg = io::parse_config_text(flat);

  std::ifstream records_in(in_dir / "records.ndjson");
  if (!records_in) {
    throw std::runtime_error("cannot open " +
                             (in_dir / "records.ndjson").string());
  }
  const std::vector<ReplicationRecord> records =
      io::read_records_ndjson(records_in);

  const SummaryTable table = summarize_records(cfg, records);
  const FigureBundle bundle = emit_figure_data(cfg, table, records);

  OutputTracker tracker;
  std::vector<std::string> names;
  try {
    io::write_figure_files(bundle, out_dir, &names);
  } catch (...) {
    for (const std::string& name : names) tracker.add(out_dir / name);
    tracker.remove_all();
    throw;
  }
  for (const std::string& name : names) out << "wrote " << name << "\n";
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app("tail-risk VaR estimation toolkit", "tailrisk");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(0, 1);

  CalibrateArgs cal;
  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "Fit the Gaussian nominal model to a price CSV");
  calibrate->add_option("--prices", cal.prices, "CSV with date,close columns")
      ->required()
      ->check(CLI::ExistingFile);
  calibrate->add_option("--alpha", cal.alpha, "VaR confidence level");
  calibrate->add_option("--out-dir", cal.out_dir,
                        "Also write the report into this directory");
  std::uint64_t cal_seed = 0;
  calibrate->add_option("--seed", cal_seed, "Unused; accepted for uniformity");

  IsVarArgs isv;
  CLI::App* is_var = app.add_subcommand(
      "is-var", "One importance-sampling VaR solve with diagnostics");
  is_var->add_option("--prices", isv.prices,
                     "Fit the model from this CSV instead of --mu/--sigma")
      ->check(CLI::ExistingFile);
  is_var->add_option("--mu", isv.mu, "Nominal mean return");
  is_var->add_option("--sigma", isv.sigma, "Nominal return volatility");
  is_var->add_option("--alpha", isv.alpha, "VaR confidence level");
  is_var->add_option("--n", isv.n, "Proposal draws per evaluation");
  is_var->add_option("--seed", isv.seed, "Master seed");
  is_var->add_option("--tol", isv.tol, "Bisection bracket width tolerance");
  is_var->add_option("--max-iter", isv.max_iter, "Bisection iteration cap");
  is_var->add_option("--out-dir", isv.out_dir,
                     "Also write the report into this directory");

  DmmBoundsArgs dmm;
  CLI::App* dmm_bounds = app.add_subcommand(
      "dmm-bounds", "Moment-matching VaR bounds swept over the moment order");
  dmm_bounds->add_option("--prices", dmm.prices,
                         "Fit the model from this CSV instead of --mu/--sigma")
      ->check(CLI::ExistingFile);
  dmm_bounds->add_option("--mu", dmm.mu, "Nominal mean return");
  dmm_bounds->add_option("--sigma", dmm.sigma, "Nominal return volatility");
  dmm_bounds->add_option("--alpha", dmm.alpha, "VaR confidence level");
  dmm_bounds->add_option("--d-max", dmm.d_max, "Highest moment order to try");
  dmm_bounds->add_option("--grid-m", dmm.grid_m, "Grid cell count");
  dmm_bounds->add_option("--span", dmm.span,
                         "Grid half-width in sigma_hat units");
  dmm_bounds->add_option("--moments", dmm.moments,
                         "Moment source: 'analytic' or 'sample'");
  dmm_bounds->add_option("--sample-n", dmm.sample_n,
                         "Sample size for sampled moments");
  dmm_bounds->add_option("--seed", dmm.seed, "Master seed");
  dmm_bounds->add_option("--out-dir", dmm.out_dir,
                         "Also write the report into this directory");

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run the full replication experiment and write reports");
  simulate->add_option("--config", sim.config,
                       "Config file (flat key=value, or a manifest.json)")
      ->check(CLI::ExistingFile);
  CLI::Option* sim_seed =
      simulate->add_option("--seed", sim.seed, "Override the master seed");
  simulate->add_option("--out-dir", sim.out_dir, "Report directory");

  FiguresArgs fig;
  CLI::App* figures = app.add_subcommand(
      "figures", "Rebuild figure data files from stored records");
  figures->add_option("--in-dir", fig.in_dir,
                      "Directory with manifest.json and records.ndjson");
  figures->add_option("--out-dir", fig.out_dir,
                      "Figure directory (defaults to --in-dir)");
  std::uint64_t fig_seed = 0;
  figures->add_option("--seed", fig_seed, "Unused; accepted for uniformity");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  if (app.get_subcommands().empty()) {
    err << app.help();
    return 1;
  }

  try {
    if (app.got_subcommand(calibrate)) return run_calibrate(cal, out);
    if (app.got_subcommand(is_var)) return run_is_var(isv, out);
    if (app.got_subcommand(dmm_bounds)) return run_dmm_bounds(dmm, out);
    if (app.got_subcommand(simulate)) {
      sim.seed_given = sim_seed->count() > 0;
      return run_simulate(sim, out);
    }
    if (app.got_subcommand(figures)) return run_figures(fig, out);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace tailrisk::cli
