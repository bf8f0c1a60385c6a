#include "tailrisk/moment_bounds.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "tailrisk/errors.hpp"
#include "tailrisk/kernels.hpp"

namespace tailrisk {
namespace {

// A CDF value counts as having reached alpha when within this tolerance;
// keeps the full-envelope and binary-search inversions consistent in the
// presence of LP round-off.
constexpr double kCrossTol = 1e-9;

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("alpha must lie strictly inside (0,1)");
  }
}

void validate_moments(const MomentVector& moments) {
  if (moments.order < 1 ||
      moments.values.size() != static_cast<std::size_t>(moments.order)) {
    throw std::invalid_argument(
        "MomentVector: order must be >= 1 and match the stored values");
  }
  for (double v : moments.values) {
    if (!std::isfinite(v)) {
      throw std::domain_error("MomentVector: non-finite moment");
    }
  }
  if (moments.order >= 2) {
    const double variance =
        moments.values[1] - moments.values[0] * moments.values[0];
    if (!(variance > 0.0)) {
      throw std::domain_error(
          "MomentVector: implied variance must be positive");
    }
  }
}

void validate_grid(const LossGrid& grid) {
  if (grid.points.size() < 2) {
    throw std::invalid_argument("LossGrid: need at least two points");
  }
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    if (!std::isfinite(grid.points[i])) {
      throw std::domain_error("LossGrid: non-finite point");
    }
    if (i > 0 && !(grid.points[i] > grid.points[i - 1])) {
      throw std::invalid_argument("LossGrid: points must strictly increase");
    }
  }
}

// Moment constraints assembled on the grid affinely mapped to [-1, 1]:
// rows stay O(1) at any order, which keeps the shared LP tolerances
// meaningful. The map is monotone, so CDF values are unchanged.
struct StandardizedSystem {
  std::vector<std::vector<double>> rows;  // (d+1) x grid points; row r = y^r
  std::vector<double> rhs;                // transformed moments; rhs[0] = 1
};

StandardizedSystem build_system(const LossGrid& grid,
                                const MomentVector& moments) {
  const std::size_t npts = grid.points.size();
  const int d = moments.order;
  const double lo = grid.points.front();
  const double hi = grid.points.back();
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);

  StandardizedSystem sys;
  sys.rows.assign(static_cast<std::size_t>(d) + 1,
                  std::vector<double>(npts, 0.0));
  std::vector<double> y(npts);
  for (std::size_t i = 0; i < npts; ++i) {
    y[i] = (grid.points[i] - center) / half;
  }
  for (std::size_t i = 0; i < npts; ++i) {
    double p = 1.0;
    for (int r = 0; r <= d; ++r) {
      sys.rows[static_cast<std::size_t>(r)][i] = p;
      p *= y[i];
    }
  }

  // E[Y^r] for Y = (L - center)/half via the binomial expansion of the raw
  // loss moments (mu_0 = 1 implied).
  sys.rhs.assign(static_cast<std::size_t>(d) + 1, 0.0);
  sys.rhs[0] = 1.0;
  const double shift = -center;
  for (int r = 1; r <= d; ++r) {
    // binom holds C(r, k) built incrementally.
    double binom = 1.0;
    double acc = std::pow(shift, r);  // k = 0 term, mu_0 = 1
    for (int k = 1; k <= r; ++k) {
      binom = binom * static_cast<double>(r - k + 1) / static_cast<double>(k);
      acc += binom * std::pow(shift, r - k) *
             moments.values[static_cast<std::size_t>(k) - 1];
    }
    sys.rhs[static_cast<std::size_t>(r)] =
        acc / std::pow(half, r);
  }
  return sys;
}

lp::LinearProgram threshold_lp(const StandardizedSystem& sys,
                               std::size_t threshold_index, lp::Sense sense) {
  const std::size_t npts = sys.rows.front().size();
  lp::LinearProgram prob;
  prob.sense = sense;
  prob.objective.assign(npts, 0.0);
  for (std::size_t i = 0; i <= threshold_index; ++i) prob.objective[i] = 1.0;
  prob.eq_matrix = sys.rows;
  prob.eq_rhs = sys.rhs;
  return prob;
}

bool crossed(double cdf_value, double alpha) {
  return cdf_value >= alpha - kCrossTol;
}

// First index in [0, npts) whose envelope value reaches alpha, where
// `maximize` selects the upper envelope. The envelope is monotone in the
// threshold, so binary search needs O(log npts) LP solves. `ok=false` means
// a threshold LP could not be certified; `residual` then carries its
// certificate norm so the caller can report the numerical breakdown.
struct CrossingResult {
  std::size_t index = 0;
  bool ok = false;
  double residual = 0.0;
};

CrossingResult first_crossing(const StandardizedSystem& sys, std::size_t npts,
                              double alpha, bool maximize) {
  std::size_t lo = 0;
  std::size_t hi = npts - 1;  // the full-mass threshold always reaches 1
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const lp::LPOutcome out = lp::solve(threshold_lp(
        sys, mid, maximize ? lp::Sense::maximize : lp::Sense::minimize));
    if (out.status != lp::Status::optimal) {
      return {mid, false, out.certificate_norm};
    }
    if (crossed(out.value, alpha)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return {lo, true, 0.0};
}

}  // namespace

LossGrid build_grid(const NominalModel& model, int m, double span) {
  if (m < 1) throw std::invalid_argument("build_grid: need m >= 1 intervals");
  if (!(span > 0.0) || !std::isfinite(span)) {
    throw std::invalid_argument("build_grid: span must be positive");
  }
  const double center = -model.mu_hat;
  const double half = span * model.sigma_hat;
  LossGrid grid;
  grid.points.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    grid.points[static_cast<std::size_t>(i)] =
        center + half * (static_cast<double>(2 * i - m) / m);
  }
  return grid;
}

MomentVector raw_moments(std::span<const double> losses, int d) {
  if (d < 1) throw std::invalid_argument("raw_moments: order must be >= 1");
  if (losses.empty()) {
    throw std::invalid_argument("raw_moments: empty sample");
  }
  const double bad = kernels::blocked_sum(losses.size(), [&](std::size_t i) {
    return std::isfinite(losses[i]) ? 0.0 : 1.0;
  });
  if (bad > 0.0) {
    throw std::domain_error("raw_moments: non-finite loss in sample");
  }
  const std::size_t k = static_cast<std::size_t>(d);
  std::vector<double> sums =
      kernels::blocked_sums(losses.size(), k, [&](std::size_t i, double* acc) {
        double p = 1.0;
        for (std::size_t r = 0; r < k; ++r) {
          p *= losses[i];
          acc[r] += p;
        }
      });
  MomentVector out;
  out.order = d;
  out.source = MomentSource::nominal_sample;
  out.values.resize(k);
  for (std::size_t r = 0; r < k; ++r) {
    out.values[r] = sums[r] / static_cast<double>(losses.size());
  }
  validate_moments(out);
  return out;
}

MomentVector analytic_gaussian_moments(const NominalModel& model, int d) {
  if (d < 1) {
    throw std::invalid_argument(
        "analytic_gaussian_moments: order must be >= 1");
  }
  // Loss L = -R with R ~ N(mu, sigma^2), so L ~ N(-mu, sigma^2). Raw moments
  // come from the binomial expansion over central Gaussian moments
  // E[(sigma Z)^k] = sigma^k (k-1)!! for even k.
  const double mean = -model.mu_hat;
  const double sigma = model.sigma_hat;
  std::vector<double> central(static_cast<std::size_t>(d) + 1, 0.0);
  central[0] = 1.0;
  double sig_pow = 1.0;
  double oddfact = 1.0;
  for (int k = 1; k <= d; ++k) {
    sig_pow *= sigma;
    if (k % 2 == 0) {
      oddfact *= static_cast<double>(k - 1);  // (k-1)!! across even k
      central[static_cast<std::size_t>(k)] = sig_pow * oddfact;
    }
  }
  MomentVector out;
  out.order = d;
  out.source = MomentSource::analytic_gaussian;
  out.values.resize(static_cast<std::size_t>(d));
  for (int r = 1; r <= d; ++r) {
    double binom = 1.0;
    double acc = central[static_cast<std::size_t>(r)];  // k = 0 mean term
    double mean_pow = 1.0;
    for (int k = 1; k <= r; ++k) {
      binom = binom * static_cast<double>(r - k + 1) / static_cast<double>(k);
      mean_pow *= mean;
      acc += binom * mean_pow * central[static_cast<std::size_t>(r - k)];
    }
    out.values[static_cast<std::size_t>(r) - 1] = acc;
  }
  validate_moments(out);
  return out;
}

CdfEnvelope cdf_envelope(const LossGrid& grid, const MomentVector& moments) {
  validate_grid(grid);
  validate_moments(moments);
  const StandardizedSystem sys = build_system(grid, moments);
  const std::size_t npts = grid.points.size();

  CdfEnvelope env;
  env.moment_order = moments.order;
  env.thresholds = grid.points;
  env.lower.assign(npts, 0.0);
  env.upper.assign(npts, 0.0);
  env.statuses.assign(npts, lp::Status::numerical_failure);

  // Independent per-threshold solves; slot assignment keeps the result
  // identical at any thread count.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t jj = 0; jj < static_cast<std::int64_t>(npts); ++jj) {
    const std::size_t j = static_cast<std::size_t>(jj);
    const lp::LPOutcome lo =
        lp::solve(threshold_lp(sys, j, lp::Sense::minimize));
    const lp::LPOutcome hi =
        lp::solve(threshold_lp(sys, j, lp::Sense::maximize));
    lp::Status worst = lp::Status::optimal;
    if (lo.status != lp::Status::optimal) worst = lo.status;
    if (hi.status != lp::Status::optimal &&
        worst != lp::Status::infeasible) {
      worst = hi.status;
    }
    env.statuses[j] = worst;
    if (worst == lp::Status::optimal) {
      env.lower[j] = std::min(std::max(lo.value, 0.0), 1.0);
      env.upper[j] = std::min(std::max(hi.value, 0.0), 1.0);
    }
  }
  env.feasible = true;
  for (lp::Status s : env.statuses) {
    if (s != lp::Status::optimal) env.feasible = false;
  }
  return env;
}

VarBracket var_bounds(const CdfEnvelope& envelope, double alpha) {
  require_alpha(alpha);
  if (!envelope.feasible) {
    throw std::invalid_argument(
        "var_bounds: envelope is infeasible; no bracket exists");
  }
  const std::size_t npts = envelope.thresholds.size();
  std::size_t lower_idx = npts;
  std::size_t upper_idx = npts;
  for (std::size_t j = 0; j < npts; ++j) {
    if (lower_idx == npts && crossed(envelope.upper[j], alpha)) lower_idx = j;
    if (upper_idx == npts && crossed(envelope.lower[j], alpha)) upper_idx = j;
  }
  if (lower_idx == npts || upper_idx == npts) {
    throw GridTooShortError(
        "var_bounds: alpha is never reached on the loss grid");
  }
  VarBracket out;
  out.lower = envelope.thresholds[lower_idx];
  out.upper = envelope.thresholds[upper_idx];
  out.alpha = alpha;
  out.moment_order = envelope.moment_order;
  out.feasible = true;
  return out;
}

VarBracket bracket_at_order(const LossGrid& grid, const MomentVector& moments,
                            double alpha) {
  require_alpha(alpha);
  validate_grid(grid);
  validate_moments(moments);
  const StandardizedSystem sys = build_system(grid, moments);
  const std::size_t npts = grid.points.size();

  VarBracket out;
  out.alpha = alpha;
  out.moment_order = moments.order;

  // One feasibility solve for the shared constraint system. A clean
  // phase-1 certificate and a solver that cannot certify any solution both
  // end the usable moment range, so either marks the order infeasible; the
  // recorded residual distinguishes the two on inspection.
  lp::LinearProgram feas = threshold_lp(sys, npts - 1, lp::Sense::minimize);
  feas.objective.assign(npts, 0.0);
  const lp::LPOutcome f = lp::solve(feas);
  if (f.status != lp::Status::optimal) {
    out.feasible = false;
    out.phase1_residual = f.certificate_norm;
    return out;
  }

  const CrossingResult lo_cross = first_crossing(sys, npts, alpha, true);
  const CrossingResult hi_cross = first_crossing(sys, npts, alpha, false);
  if (!lo_cross.ok || !hi_cross.ok) {
    out.feasible = false;
    out.phase1_residual = std::max(lo_cross.ok ? 0.0 : lo_cross.residual,
                                   hi_cross.ok ? 0.0 : hi_cross.residual);
    return out;
  }
  out.lower = grid.points[lo_cross.index];
  out.upper = grid.points[hi_cross.index];
  out.feasible = true;
  return out;
}

std::vector<VarBracket> moment_sweep(const LossGrid& grid,
                                     const MomentVector& moments_full,
                                     double alpha, int d_max) {
  require_alpha(alpha);
  validate_moments(moments_full);
  if (d_max < 1 || d_max > moments_full.order) {
    throw std::invalid_argument(
        "moment_sweep: d_max must lie in [1, moments_full.order]");
  }
  std::vector<VarBracket> out;
  out.reserve(static_cast<std::size_t>(d_max));
  for (int d = 1; d <= d_max; ++d) {
    MomentVector prefix;
    prefix.order = d;
    prefix.source = moments_full.source;
    prefix.values.assign(moments_full.values.begin(),
                         moments_full.values.begin() + d);
    out.push_back(bracket_at_order(grid, prefix, alpha));
    if (!out.back().feasible) break;  // frontier found; deeper orders only shrink
  }
  return out;
}

double bracket_midpoint(const VarBracket& bracket) {
  if (!bracket.feasible) {
    throw std::domain_error("bracket_midpoint: bracket is infeasible");
  }
  return 0.5 * (bracket.lower + bracket.upper);
}

double bracket_width(const VarBracket& bracket) {
  if (!bracket.feasible) {
    throw std::domain_error("bracket_width: bracket is infeasible");
  }
  return bracket.upper - bracket.lower;
}

}  // namespace tailrisk
