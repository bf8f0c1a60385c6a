#include "tailrisk/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "tailrisk/distributions.hpp"
#include "tailrisk/truth.hpp"

namespace tailrisk {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Role tags for the independent substreams inside one replication.
constexpr std::uint64_t kTruthStream = 1;
constexpr std::uint64_t kMomentStream = 2;
constexpr std::uint64_t kSolverStream = 3;

std::size_t index_of(const std::vector<double>& values, double v,
                     const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == v) return i;
  }
  throw std::invalid_argument(std::string("run_replication: ") + what +
                              " is not part of the configuration");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!std::isfinite(base_mu)) {
    throw std::invalid_argument("config: base_mu must be finite");
  }
  if (!(base_sigma > 0.0) || !std::isfinite(base_sigma)) {
    throw std::invalid_argument("config: base_sigma must be > 0");
  }
  if (nus.empty() || alphas.empty()) {
    throw std::invalid_argument("config: need at least one nu and one alpha");
  }
  for (double nu : nus) {
    if (!(nu > 2.0) || !std::isfinite(nu)) {
      throw std::invalid_argument(
          "config: every nu must exceed 2 so the truth has a variance");
    }
  }
  for (double a : alphas) {
    if (!(a > 0.0) || !(a < 1.0)) {
      throw std::invalid_argument("config: every alpha must lie in (0,1)");
    }
  }
  if (n_mc < 1) throw std::invalid_argument("config: n_mc must be >= 1");
  if (m_reps < 1) throw std::invalid_argument("config: m_reps must be >= 1");
  if (t_obs < 2) throw std::invalid_argument("config: t_obs must be >= 2");
  if (dmm.grid_m < 1) throw std::invalid_argument("config: grid_m must be >= 1");
  if (!(dmm.grid_span > 0.0)) {
    throw std::invalid_argument("config: grid_span must be > 0");
  }
  if (dmm.d_max < 1) throw std::invalid_argument("config: d_max must be >= 1");
  if (dmm.moment_sample_n < 2) {
    throw std::invalid_argument("config: moment_sample_n must be >= 2");
  }
  if (!(is.tol > 0.0)) throw std::invalid_argument("config: is_tol must be > 0");
  if (is.max_iter < 1) {
    throw std::invalid_argument("config: is_max_iter must be >= 1");
  }
}

Seed replication_seed(const ExperimentConfig& cfg, std::size_t nu_index,
                      std::size_t alpha_index, int rep_index) {
  return rng::derive(cfg.master_seed, nu_index, alpha_index,
                     static_cast<std::uint64_t>(rep_index));
}

ReplicationRecord run_replication(const ExperimentConfig& cfg, double nu,
                                  double alpha, int rep_index) {
  const std::size_t i_nu = index_of(cfg.nus, nu, "nu");
  const std::size_t i_alpha = index_of(cfg.alphas, alpha, "alpha");
  if (rep_index < 0 || rep_index >= cfg.m_reps) {
    throw std::invalid_argument("run_replication: rep_index out of range");
  }
  const Seed rep_seed = replication_seed(cfg, i_nu, i_alpha, rep_index);

  ReplicationRecord rec;
  rec.nu = nu;
  rec.alpha = alpha;
  rec.rep_index = rep_index;
  try {
    const TrueModel truth = make_true_model(nu, cfg.base_mu, cfg.base_sigma);
    const ReturnSeries returns = sample_true_returns(
        truth, cfg.t_obs, rng::derive(rep_seed, kTruthStream));

    const NominalModel refit = fit_gaussian_mle(returns);
    rec.mu_hat = refit.mu_hat;
    rec.sigma_hat = refit.sigma_hat;

    // The analytic target keeps the replication's location estimate but the
    // experiment-level variance-matched scale.
    rec.true_var = true_var(refit.mu_hat, truth.s_nu, nu, alpha);

    const LossGrid grid = build_grid(refit, cfg.dmm.grid_m, cfg.dmm.grid_span);
    MomentVector moments;
    if (cfg.dmm.moment_source == MomentSource::analytic_gaussian) {
      moments = analytic_gaussian_moments(refit, cfg.dmm.d_max);
    } else {
      const std::vector<double> rs =
          sample_normal(NormalParams(refit.mu_hat, refit.sigma_hat),
                        cfg.dmm.moment_sample_n,
                        rng::derive(rep_seed, kMomentStream));
      std::vector<double> losses(rs.size());
      for (std::size_t i = 0; i < rs.size(); ++i) losses[i] = -rs[i];
      moments = raw_moments(losses, cfg.dmm.d_max);
      moments.source = MomentSource::nominal_sample;
    }
    const std::vector<VarBracket> sweep =
        moment_sweep(grid, moments, alpha, cfg.dmm.d_max);
    const VarBracket* chosen = nullptr;
    for (const VarBracket& b : sweep) {
      if (b.feasible) chosen = &b;
    }
    if (chosen == nullptr) {
      throw std::runtime_error(
          "moment system infeasible at every order, including d = 1");
    }
    rec.dmm_bracket = *chosen;
    rec.dmm_midpoint = bracket_midpoint(*chosen);
    rec.d_star = chosen->moment_order;

    const ISVarResult is_result = solve_var_bisection(
        refit, alpha, cfg.n_mc, rng::derive(rep_seed, kSolverStream),
        cfg.is.tol, cfg.is.max_iter);
    rec.is_var = is_result.var_estimate;
    rec.is_bracket_lo = is_result.bracket_lo;
    rec.is_bracket_hi = is_result.bracket_hi;
    rec.is_iterations = is_result.iterations;
    rec.ess = is_result.diagnostics.ess;
    rec.max_weight_share = is_result.diagnostics.max_weight_share;
    rec.tilt_degenerate = is_result.tilt_degenerate;
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.failure = e.what();
  }
  return rec;
}

CellSummary summarize_cell(double nu, double alpha,
                           std::span<const ReplicationRecord> records) {
  CellSummary cell;
  cell.nu = nu;
  cell.alpha = alpha;

  std::vector<double> is_var, tv, err, ess, maxw, dlo, dhi, dmid;
  for (const ReplicationRecord& r : records) {
    if (r.nu != nu || r.alpha != alpha) {
      throw std::invalid_argument("summarize_cell: record from another cell");
    }
    if (!r.ok) {
      ++cell.n_failed;
      continue;
    }
    ++cell.n_ok;
    is_var.push_back(r.is_var);
    tv.push_back(r.true_var);
    err.push_back(r.is_var - r.true_var);
    ess.push_back(r.ess);
    maxw.push_back(r.max_weight_share);
    dlo.push_back(r.dmm_bracket.lower);
    dhi.push_back(r.dmm_bracket.upper);
    dmid.push_back(r.dmm_midpoint - r.true_var);
  }

  if (cell.n_ok < 2) {
    cell.sufficient = false;
    cell.true_var_mean = cell.is_mean = cell.is_std = cell.is_bias = kNaN;
    cell.is_variance = cell.is_mse = cell.ess_mean = cell.max_w_mean = kNaN;
    cell.dmm_lower_mean = cell.dmm_upper_mean = kNaN;
    cell.dmm_width_mean = cell.dmm_mid_bias = kNaN;
    return cell;
  }

  cell.sufficient = true;
  cell.true_var_mean = mean_of(tv);
  cell.is_mean = mean_of(is_var);
  cell.is_bias = mean_of(err);
  double ss = 0.0;
  for (double v : is_var) ss += (v - cell.is_mean) * (v - cell.is_mean);
  cell.is_variance = ss / static_cast<double>(is_var.size() - 1);
  cell.is_std = std::sqrt(cell.is_variance);
  cell.is_mse = cell.is_bias * cell.is_bias + cell.is_variance;
  cell.ess_mean = mean_of(ess);
  cell.max_w_mean = mean_of(maxw);
  cell.dmm_lower_mean = mean_of(dlo);
  cell.dmm_upper_mean = mean_of(dhi);
  double wsum = 0.0;
  for (std::size_t i = 0; i < dlo.size(); ++i) wsum += dhi[i] - dlo[i];
  cell.dmm_width_mean = wsum / static_cast<double>(dlo.size());
  cell.dmm_mid_bias = mean_of(dmid);
  return cell;
}

SummaryTable summarize_records(const ExperimentConfig& cfg,
                               std::span<const ReplicationRecord> records) {
  const std::size_t reps = static_cast<std::size_t>(cfg.m_reps);
  const std::size_t expected = cfg.nus.size() * cfg.alphas.size() * reps;
  if (records.size() != expected) {
    throw std::invalid_argument(
        "summarize_records: record count does not match the configuration");
  }
  SummaryTable table;
  std::size_t offset = 0;
  for (double nu : cfg.nus) {
    for (double alpha : cfg.alphas) {
      table.cells.push_back(
          summarize_cell(nu, alpha, records.subspan(offset, reps)));
      offset += reps;
    }
  }
  return table;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t n_cells = cfg.nus.size() * cfg.alphas.size();
  const std::size_t reps = static_cast<std::size_t>(cfg.m_reps);
  const std::size_t total = n_cells * reps;

  ExperimentResult result;
  result.records.resize(total);

  // Replications are independent; each writes only its own slot, and the
  // summary fold below runs in fixed order, so the outcome does not depend
  // on the thread count.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(total); ++k) {
    const std::size_t idx = static_cast<std::size_t>(k);
    const std::size_t cell = idx / reps;
    const int rep = static_cast<int>(idx % reps);
    const std::size_t i_nu = cell / cfg.alphas.size();
    const std::size_t i_alpha = cell % cfg.alphas.size();
    result.records[idx] =
        run_replication(cfg, cfg.nus[i_nu], cfg.alphas[i_alpha], rep);
  }

  result.table = summarize_records(cfg, result.records);
  return result;
}

FigureBundle emit_figure_data(const ExperimentConfig& cfg,
                              const SummaryTable& table,
                              std::span<const ReplicationRecord> records) {
  if (table.cells.empty() || records.empty()) {
    throw std::invalid_argument("emit_figure_data: empty experiment result");
  }
  const ReplicationRecord* rep = nullptr;
  for (const ReplicationRecord& r : records) {
    if (r.ok) {
      rep = &r;
      break;
    }
  }
  if (rep == nullptr) {
    throw std::runtime_error(
        "emit_figure_data: no successful replication to draw figures from");
  }

  FigureBundle bundle;

  // Regenerate the representative replication's losses from its substream;
  // records carry seeds implicitly via (cfg, cell, rep_index).
  const std::size_t i_nu = index_of(cfg.nus, rep->nu, "nu");
  const std::size_t i_alpha = index_of(cfg.alphas, rep->alpha, "alpha");
  const Seed rep_seed = replication_seed(cfg, i_nu, i_alpha, rep->rep_index);
  const TrueModel truth =
      make_true_model(rep->nu, cfg.base_mu, cfg.base_sigma);
  const ReturnSeries returns = sample_true_returns(
      truth, cfg.t_obs, rng::derive(rep_seed, kTruthStream));

  auto& br = bundle.bracketing;
  br.nu = rep->nu;
  br.alpha = rep->alpha;
  br.moment_order = rep->d_star;
  br.losses_sorted.resize(returns.values.size());
  for (std::size_t i = 0; i < returns.values.size(); ++i) {
    br.losses_sorted[i] = -returns.values[i];
  }
  std::sort(br.losses_sorted.begin(), br.losses_sorted.end());
  br.ecdf.resize(br.losses_sorted.size());
  for (std::size_t i = 0; i < br.ecdf.size(); ++i) {
    br.ecdf[i] = static_cast<double>(i + 1) /
                 static_cast<double>(br.ecdf.size());
  }
  br.dmm_lower = rep->dmm_bracket.lower;
  br.dmm_upper = rep->dmm_bracket.upper;
  // Left-continuous empirical quantile at alpha as the MC reference.
  const std::size_t qidx = static_cast<std::size_t>(std::max(
      0.0, std::ceil(rep->alpha * static_cast<double>(br.losses_sorted.size())) - 1.0));
  br.mc_var_ref = br.losses_sorted[std::min(qidx, br.losses_sorted.size() - 1)];

  // Bracket-versus-order series for the same replication, regenerated from
  // its refit model and moment substream.
  const NominalModel refit(rep->mu_hat, rep->sigma_hat, cfg.t_obs);
  const LossGrid grid = build_grid(refit, cfg.dmm.grid_m, cfg.dmm.grid_span);
  MomentVector moments;
  if (cfg.dmm.moment_source == MomentSource::analytic_gaussian) {
    moments = analytic_gaussian_moments(refit, cfg.dmm.d_max);
  } else {
    const std::vector<double> rs =
        sample_normal(NormalParams(refit.mu_hat, refit.sigma_hat),
                      cfg.dmm.moment_sample_n,
                      rng::derive(rep_seed, kMomentStream));
    std::vector<double> losses(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) losses[i] = -rs[i];
    moments = raw_moments(losses, cfg.dmm.d_max);
  }
  const std::vector<VarBracket> sweep =
      moment_sweep(grid, moments, rep->alpha, cfg.dmm.d_max);
  auto& sens = bundle.sensitivity;
  sens.nu = rep->nu;
  sens.alpha = rep->alpha;
  for (const VarBracket& b : sweep) {
    sens.orders.push_back(b.moment_order);
    sens.lower.push_back(b.feasible ? b.lower : kNaN);
    sens.upper.push_back(b.feasible ? b.upper : kNaN);
    sens.feasible.push_back(b.feasible ? 1 : 0);
    if (b.feasible) sens.d_star = b.moment_order;
  }

  for (const CellSummary& cell : table.cells) {
    if (!cell.sufficient) continue;
    FigureBundle::CellPoint p;
    p.nu = cell.nu;
    p.alpha = cell.alpha;
    p.true_var_mean = cell.true_var_mean;
    p.is_mean = cell.is_mean;
    p.is_bias = cell.is_bias;
    p.is_std = cell.is_std;
    p.ess_mean = cell.ess_mean;
    p.max_w_mean = cell.max_w_mean;
    bundle.cells.push_back(p);
  }
  return bundle;
}

}  // namespace tailrisk
