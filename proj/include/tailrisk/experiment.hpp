#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tailrisk/importance_sampling.hpp"
#include "tailrisk/moment_bounds.hpp"
#include "tailrisk/rng.hpp"

namespace tailrisk {

struct DmmSettings {
  int grid_m = 200;
  double grid_span = 8.0;
  int d_max = 8;  // sweep bound; each replication uses the last feasible order
  MomentSource moment_source = MomentSource::nominal_sample;
  std::size_t moment_sample_n = 100000;
};

struct IsSettings {
  double tol = 1e-6;
  int max_iter = 100;
};

/// Full experiment specification. The defaults reproduce the reference run:
/// a heavy-tailed truth per (nu, alpha) cell, M replications each of T
/// observed returns, an IS solve with N proposal draws, and a moment-bound
/// sweep per replication.
struct ExperimentConfig {
  double base_mu = 0.0005;
  double base_sigma = 0.011;
  std::vector<double> nus{5.0, 7.0, 10.0};
  std::vector<double> alphas{0.990, 0.995};
  std::size_t n_mc = 10000;    // IS proposal draws per solve
  int m_reps = 100;            // replications per cell
  std::size_t t_obs = 2000;    // observed returns per replication
  Seed master_seed{42};
  DmmSettings dmm;
  IsSettings is;

  void validate() const;  // throws std::invalid_argument on any bad field
};

/// One replication's outputs. Failed replications carry a failure tag and
/// are excluded from aggregates but still counted.
struct ReplicationRecord {
  double nu = 0.0;
  double alpha = 0.0;
  int rep_index = 0;
  bool ok = false;
  std::string failure;
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  double true_var = 0.0;
  double is_var = 0.0;
  double is_bracket_lo = 0.0;
  double is_bracket_hi = 0.0;
  int is_iterations = 0;
  double ess = 0.0;
  double max_weight_share = 0.0;
  bool tilt_degenerate = false;
  VarBracket dmm_bracket;  // at the selected order d_star
  double dmm_midpoint = 0.0;
  int d_star = 0;
};

/// Per-cell aggregates over successful replications. `sufficient` is false
/// (and the statistics are NaN) when fewer than two replications succeeded.
struct CellSummary {
  double nu = 0.0;
  double alpha = 0.0;
  int n_ok = 0;
  int n_failed = 0;
  bool sufficient = false;
  double true_var_mean = 0.0;
  double is_mean = 0.0;
  double is_std = 0.0;
  double is_bias = 0.0;
  double is_variance = 0.0;
  double is_mse = 0.0;  // bias^2 + variance by definition
  double ess_mean = 0.0;
  double max_w_mean = 0.0;
  double dmm_lower_mean = 0.0;
  double dmm_upper_mean = 0.0;
  double dmm_width_mean = 0.0;
  double dmm_mid_bias = 0.0;
};

struct SummaryTable {
  std::vector<CellSummary> cells;  // nu-major, alpha-minor, config order
};

struct ExperimentResult {
  SummaryTable table;
  std::vector<ReplicationRecord> records;  // cell-major, replication order
};

/// Plot-ready series derived from one experiment run.
struct FigureBundle {
  /// Empirical loss CDF of one representative replication with its moment
  /// bracket and a Monte Carlo quantile reference.
  struct Bracketing {
    double nu = 0.0;
    double alpha = 0.0;
    int moment_order = 0;
    std::vector<double> losses_sorted;
    std::vector<double> ecdf;
    double dmm_lower = 0.0;
    double dmm_upper = 0.0;
    double mc_var_ref = 0.0;
  } bracketing;

  /// Bracket endpoints versus moment order for the same replication.
  struct OrderSensitivity {
    double nu = 0.0;
    double alpha = 0.0;
    std::vector<int> orders;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<int> feasible;
    int d_star = 0;
  } sensitivity;

  /// One point per sufficient cell; feeds the calibration scatter, the bias
  /// and dispersion profiles, and the stability/trade-off series.
  struct CellPoint {
    double nu = 0.0;
    double alpha = 0.0;
    double true_var_mean = 0.0;
    double is_mean = 0.0;
    double is_bias = 0.0;
    double is_std = 0.0;
    double ess_mean = 0.0;
    double max_w_mean = 0.0;
  };
  std::vector<CellPoint> cells;
};

/// Substream seed for one replication: master seed hash-combined with the
/// cell indices and the replication index, so streams never overlap.
Seed replication_seed(const ExperimentConfig& cfg, std::size_t nu_index,
                      std::size_t alpha_index, int rep_index);

/// One replication: draw T true returns, refit the Gaussian by MLE, compute
/// the analytic true VaR, the moment bracket at the deepest feasible order,
/// and the IS solve. Any sub-operation error is captured in the record.
/// Deterministic: a pure function of (cfg, nu, alpha, rep_index).
ReplicationRecord run_replication(const ExperimentConfig& cfg, double nu,
                                  double alpha, int rep_index);

/// Aggregate one cell's records (already filtered to a single (nu, alpha)).
CellSummary summarize_cell(double nu, double alpha,
                           std::span<const ReplicationRecord> records);

/// Aggregate a full record set into the summary table, cell by cell.
SummaryTable summarize_records(const ExperimentConfig& cfg,
                               std::span<const ReplicationRecord> records);

/// Run every (nu, alpha, replication) task. Replications execute
/// concurrently; records land in preassigned slots and aggregation folds in
/// fixed order, so the result is identical at any thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Derive figure series from a finished run. The representative replication
/// is the first successful one in record order (losses are regenerated from
/// its substream; records do not store raw samples).
FigureBundle emit_figure_data(const ExperimentConfig& cfg,
                              const SummaryTable& table,
                              std::span<const ReplicationRecord> records);

}  // namespace tailrisk
