#include "tailrisk/importance_sampling.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tailrisk/distributions.hpp"
#include "tailrisk/errors.hpp"
#include "tailrisk/kernels.hpp"

namespace tailrisk {
namespace {

// Slightly under log(DBL_MAX); anything at or above this cannot be
// exponentiated to a finite weight.
constexpr double kMaxLogWeight = 709.0;

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("alpha must lie strictly inside (0,1)");
  }
}

// One proposal sample shared by everything a solve needs: returns, raw
// weights, and weight diagnostics. Drawn once per solve (common random
// numbers), so the estimated tail curve is a fixed step function of x.
struct ProposalSample {
  std::vector<double> returns;
  std::vector<double> weights;
  ISDiagnostics diagnostics;
};

ISDiagnostics diagnostics_from_log_weights(std::span<const double> logw) {
  const std::size_t n = logw.size();
  // Max-log shift: normalized weights are exp(lw - max)/sum exp(lw - max),
  // immune to overflow and underflow at any tilt.
  const double mx =
      kernels::blocked_max(n, [&](std::size_t i) { return logw[i]; });
  const std::vector<double> sums =
      kernels::blocked_sums(n, 2, [&](std::size_t i, double* acc) {
        const double e = std::exp(logw[i] - mx);
        acc[0] += e;
        acc[1] += e * e;
      });
  ISDiagnostics out;
  out.ess = sums[0] * sums[0] / sums[1];
  out.max_weight_share = 1.0 / sums[0];
  return out;
}

ProposalSample draw_proposal(const NominalModel& model, double theta,
                             std::size_t n, Seed seed) {
  if (n == 0) throw std::invalid_argument("sample count must be at least 1");
  ProposalSample ps;
  ps.returns.resize(n);
  const double proposal_mu = model.mu_hat - theta;
  kernels::parallel_fill(ps.returns, [&](std::size_t i) {
    return proposal_mu +
           model.sigma_hat * normal_quantile(rng::uniform01_at(seed, i));
  });
  std::vector<double> logw(n);
  kernels::parallel_fill(logw, [&](std::size_t i) {
    return log_likelihood_ratio(model, theta, ps.returns[i]);
  });
  const double max_logw =
      kernels::blocked_max(n, [&](std::size_t i) { return logw[i]; });
  if (max_logw >= kMaxLogWeight) throw WeightOverflowError(max_logw);
  ps.weights.resize(n);
  kernels::parallel_fill(ps.weights,
                         [&](std::size_t i) { return std::exp(logw[i]); });
  ps.diagnostics = diagnostics_from_log_weights(logw);
  return ps;
}

// Tail estimate at threshold x from an existing proposal sample.
double tail_estimate_at(const ProposalSample& ps, double x) {
  const std::size_t n = ps.returns.size();
  const double num = kernels::blocked_sum(n, [&](std::size_t i) {
    return ps.returns[i] < -x ? ps.weights[i] : 0.0;
  });
  return num / static_cast<double>(n);
}

}  // namespace

TiltChoice tilt_from_pilot(const NominalModel& model, double alpha) {
  require_alpha(alpha);
  const double pilot = gaussian_var(model, alpha);
  const double theta = model.mu_hat + pilot;
  return TiltChoice{theta, theta <= 0.0};
}

double log_likelihood_ratio(const NominalModel& model, double theta,
                            double r) {
  const double s2 = model.sigma_hat * model.sigma_hat;
  return theta * (r - model.mu_hat) / s2 + theta * theta / (2.0 * s2);
}

double likelihood_ratio(const NominalModel& model, double theta, double r) {
  const double lw = log_likelihood_ratio(model, theta, r);
  if (lw >= kMaxLogWeight) throw WeightOverflowError(lw);
  return std::exp(lw);
}

ISDiagnostics diagnostics_from_weights(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) {
    throw std::invalid_argument("diagnostics_from_weights: empty sequence");
  }
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::domain_error(
          "diagnostics_from_weights: weights must be finite and nonnegative");
    }
  }
  const std::vector<double> sums =
      kernels::blocked_sums(n, 2, [&](std::size_t i, double* acc) {
        acc[0] += weights[i];
        acc[1] += weights[i] * weights[i];
      });
  if (!(sums[0] > 0.0)) {
    throw std::domain_error(
        "diagnostics_from_weights: all weights are zero");
  }
  const double mx =
      kernels::blocked_max(n, [&](std::size_t i) { return weights[i]; });
  ISDiagnostics out;
  out.ess = sums[0] * sums[0] / sums[1];
  out.max_weight_share = mx / sums[0];
  return out;
}

TailEstimate estimate_tail_probability(const NominalModel& model, double theta,
                                       double x, std::size_t n, Seed seed) {
  if (!std::isfinite(x)) {
    throw std::domain_error("estimate_tail_probability: x must be finite");
  }
  const ProposalSample ps = draw_proposal(model, theta, n, seed);
  TailEstimate out;
  out.p_hat = tail_estimate_at(ps, x);
  out.diagnostics = ps.diagnostics;
  const double hits = kernels::blocked_sum(n, [&](std::size_t i) {
    return ps.returns[i] < -x ? 1.0 : 0.0;
  });
  out.zero_hits = hits == 0.0;
  return out;
}

ISVarResult solve_var_bisection(const NominalModel& model, double alpha,
                                std::size_t n, Seed seed, double tol,
                                int max_iter, double bracket_half_width_sigmas) {
  require_alpha(alpha);
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (!(bracket_half_width_sigmas > 0.0)) {
    throw std::invalid_argument("bracket half-width must be positive");
  }

  const double target = 1.0 - alpha;
  const TiltChoice tilt = tilt_from_pilot(model, alpha);
  const ProposalSample ps = draw_proposal(model, tilt.theta, n, seed);
  const double pilot = gaussian_var(model, alpha);

  // Establish a bracket around the pilot; double the half-width a few times
  // if the estimated curve does not straddle the target there.
  double half = bracket_half_width_sigmas * model.sigma_hat;
  double lo = 0.0, hi = 0.0, p_lo = 0.0, p_hi = 0.0;
  bool valid = false;
  for (int attempt = 0; attempt <= 5; ++attempt) {
    lo = pilot - half;
    hi = pilot + half;
    p_lo = tail_estimate_at(ps, lo);
    p_hi = tail_estimate_at(ps, hi);
    if (p_lo >= target && p_hi <= target) {
      valid = true;
      break;
    }
    half *= 2.0;
  }
  if (!valid) {
    throw BracketingError(
        "solve_var_bisection: no bracket after expansion; tail estimates " +
        std::to_string(p_lo) + " .. " + std::to_string(p_hi) +
        " never straddle " + std::to_string(target));
  }

  int iterations = 0;
  while (hi - lo > tol) {
    if (iterations >= max_iter) {
      throw BisectionConvergenceError(lo, hi, iterations);
    }
    ++iterations;
    const double mid = 0.5 * (lo + hi);
    if (tail_estimate_at(ps, mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  ISVarResult out;
  out.var_estimate = 0.5 * (lo + hi);
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.iterations = iterations;
  out.diagnostics = ps.diagnostics;
  out.n_samples = n;
  out.target_tail = target;
  out.tilt_degenerate = tilt.degenerate;
  return out;
}

}  // namespace tailrisk
