#include "tailrisk/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tailrisk/distributions.hpp"
#include "tailrisk/errors.hpp"

namespace tailrisk {

NominalModel::NominalModel(double mu_hat_, double sigma_hat_,
                           std::size_t sample_size_)
    : mu_hat(mu_hat_), sigma_hat(sigma_hat_), sample_size(sample_size_) {
  if (!std::isfinite(mu_hat) || !std::isfinite(sigma_hat) ||
      !(sigma_hat > 0.0)) {
    throw std::domain_error(
        "NominalModel requires finite mu_hat and sigma_hat > 0");
  }
}

ReturnSeries log_returns(const PriceSeries& prices) {
  const auto& closes = prices.closes;
  if (closes.size() < 2) {
    throw std::invalid_argument(
        "log_returns: need at least two prices, got " +
        std::to_string(closes.size()));
  }
  for (std::size_t t = 0; t < closes.size(); ++t) {
    if (!std::isfinite(closes[t]) || !(closes[t] > 0.0)) {
      throw std::domain_error("log_returns: non-positive price at index " +
                              std::to_string(t));
    }
  }
  ReturnSeries out;
  out.values.resize(closes.size() - 1);
  for (std::size_t t = 1; t < closes.size(); ++t) {
    out.values[t - 1] = std::log(closes[t] / closes[t - 1]);
  }
  return out;
}

NominalModel fit_gaussian_mle(const ReturnSeries& returns) {
  const auto& v = returns.values;
  const std::size_t t = v.size();
  if (t < 2) {
    throw DegenerateSampleError(
        "fit_gaussian_mle: degenerate sample, need at least two returns");
  }
  if (std::all_of(v.begin(), v.end(),
                  [&](double r) { return r == v.front(); })) {
    throw DegenerateSampleError(
        "fit_gaussian_mle: constant return series has zero variance");
  }
  // Fixed left-to-right accumulation keeps the fit bit-deterministic.
  double sum = 0.0;
  for (double r : v) sum += r;
  const double mu = sum / static_cast<double>(t);
  double ss = 0.0;
  for (double r : v) ss += (r - mu) * (r - mu);
  const double var = ss / static_cast<double>(t);  // MLE normalization
  if (!(var > 0.0)) {
    throw DegenerateSampleError(
        "fit_gaussian_mle: zero-variance sample is degenerate");
  }
  return NominalModel(mu, std::sqrt(var), t);
}

double gaussian_var(const NominalModel& model, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("gaussian_var: alpha must lie in (0,1)");
  }
  return -(model.mu_hat + model.sigma_hat * normal_quantile(1.0 - alpha));
}

}  // namespace tailrisk
