#pragma once

#include <cstddef>
#include <span>

#include "tailrisk/calibration.hpp"
#include "tailrisk/rng.hpp"

namespace tailrisk {

/// Mean-shifted Gaussian sampling measure N(mu_hat - theta, sigma_hat^2).
struct TiltedProposal {
  NominalModel base;
  double theta;
};

/// Weight-stability summary computed from all n normalized weights.
struct ISDiagnostics {
  double ess = 0.0;               // 1 / sum of squared normalized weights
  double max_weight_share = 0.0;  // largest normalized weight
};

/// Tilt magnitude selected from the closed-form pilot VaR. `degenerate` is
/// a warning flag: theta <= 0 means the proposal does not shift toward the
/// loss tail and the estimator degrades to naive Monte Carlo direction.
struct TiltChoice {
  double theta = 0.0;
  bool degenerate = false;
};

struct TailEstimate {
  double p_hat = 0.0;
  ISDiagnostics diagnostics;
  bool zero_hits = false;  // no draw landed past the threshold
};

struct ISVarResult {
  double var_estimate = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
  ISDiagnostics diagnostics;
  std::size_t n_samples = 0;
  double target_tail = 0.0;
  bool tilt_degenerate = false;
};

/// theta = mu_hat + x0 where x0 is the closed-form Gaussian VaR pilot;
/// algebraically sigma_hat times the standard normal alpha-quantile, so the
/// proposal mean lands exactly at -x0.
TiltChoice tilt_from_pilot(const NominalModel& model, double alpha);

/// Closed-form Gaussian mean-shift log likelihood ratio
/// log W = theta (r - mu)/sigma^2 + theta^2 / (2 sigma^2).
double log_likelihood_ratio(const NominalModel& model, double theta, double r);

/// exp of the log ratio. Throws WeightOverflowError (carrying the offending
/// log-weight) rather than returning infinity.
double likelihood_ratio(const NominalModel& model, double theta, double r);

/// ESS and max share from a nonnegative weight sequence. Throws
/// std::domain_error if every weight is zero.
ISDiagnostics diagnostics_from_weights(std::span<const double> weights);

/// Unbiased tilted estimate of P(-R > x) = P(R < -x) under the nominal
/// model, with n proposal draws from N(mu_hat - theta, sigma_hat^2).
TailEstimate estimate_tail_probability(const NominalModel& model, double theta,
                                       double x, std::size_t n, Seed seed);

/// VaR as the root of p(x) = 1 - alpha by bisection over a tilted estimator
/// under common random numbers: the n proposal draws are generated once per
/// solve and reused by every evaluation, making the estimated tail curve a
/// fixed monotone step function of x. Returns the bracket midpoint once the
/// bracket is narrower than tol.
ISVarResult solve_var_bisection(const NominalModel& model, double alpha,
                                std::size_t n, Seed seed, double tol = 1e-6,
                                int max_iter = 100,
                                double bracket_half_width_sigmas = 6.0);

}  // namespace tailrisk
