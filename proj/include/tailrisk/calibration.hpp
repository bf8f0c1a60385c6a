#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tailrisk {

/// Daily closing prices keyed by ISO-8601 dates. Dates are strictly
/// increasing and closes strictly positive once loaded.
struct PriceSeries {
  std::vector<std::string> dates;
  std::vector<double> closes;
};

/// One-day log-returns; one element fewer than the price series.
struct ReturnSeries {
  std::vector<double> values;
};

/// Gaussian return model fitted by maximum likelihood. sigma_hat uses the
/// MLE (1/T) normalization, not the unbiased 1/(T-1) variant.
struct NominalModel {
  double mu_hat;
  double sigma_hat;  // strictly positive
  std::size_t sample_size;
  explicit NominalModel(double mu_hat, double sigma_hat,
                        std::size_t sample_size = 0);
};

/// r_t = log(P_t / P_{t-1}). Throws on fewer than two prices or any
/// non-positive price.
ReturnSeries log_returns(const PriceSeries& prices);

/// Gaussian MLE fit; throws DegenerateSampleError for fewer than two returns
/// or a zero-variance (constant) series.
NominalModel fit_gaussian_mle(const ReturnSeries& returns);

/// Closed-form Gaussian value-at-risk -(mu_hat + sigma_hat * z_{1-alpha});
/// the unique x with P(-R > x) = 1 - alpha under the fitted model.
double gaussian_var(const NominalModel& model, double alpha);

}  // namespace tailrisk
