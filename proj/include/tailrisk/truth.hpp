#pragma once

#include <cstddef>

#include "tailrisk/calibration.hpp"
#include "tailrisk/rng.hpp"

namespace tailrisk {

/// Heavy-tailed data-generating process mu_star + s_nu * T_nu, scaled so its
/// variance equals the nominal sigma_hat^2 (variance matching).
struct TrueModel {
  double nu;  // > 2
  double mu_star;
  double s_nu;  // > 0
};

/// s_nu = sigma_hat * sqrt((nu-2)/nu), the scale at which the t model's
/// variance equals sigma_hat^2. Requires nu > 2.
double variance_matched_scale(double nu, double sigma_hat);

/// Variance-matched t model centered at the nominal mean.
TrueModel make_true_model(double nu, double mu_hat, double sigma_hat);

/// t_count i.i.d. returns from the true model, by inverse-CDF transform of
/// the shared uniform stream design (pure function of model, count, seed).
ReturnSeries sample_true_returns(const TrueModel& model, std::size_t t_count,
                                 Seed seed);

/// Analytic value-at-risk of the t model: -(mu_hat + s_nu * t_{nu,1-alpha}).
double true_var(double mu_hat, double s_nu, double nu, double alpha);

}  // namespace tailrisk
