#include "tailrisk/truth.hpp"

#include <cmath>
#include <stdexcept>

#include "tailrisk/distributions.hpp"

namespace tailrisk {

double variance_matched_scale(double nu, double sigma_hat) {
  if (!(nu > 2.0) || !std::isfinite(nu)) {
    throw std::domain_error(
        "variance_matched_scale: nu must exceed 2 for a finite variance");
  }
  if (!(sigma_hat > 0.0) || !std::isfinite(sigma_hat)) {
    throw std::domain_error("variance_matched_scale: sigma_hat must be > 0");
  }
  return sigma_hat * std::sqrt((nu - 2.0) / nu);
}

TrueModel make_true_model(double nu, double mu_hat, double sigma_hat) {
  if (!std::isfinite(mu_hat)) {
    throw std::domain_error("make_true_model: mu_hat must be finite");
  }
  return TrueModel{nu, mu_hat, variance_matched_scale(nu, sigma_hat)};
}

ReturnSeries sample_true_returns(const TrueModel& model, std::size_t t_count,
                                 Seed seed) {
  const StudentTParams params(model.nu, model.mu_star, model.s_nu);
  ReturnSeries out;
  out.values = sample_student_t(params, t_count, seed);
  return out;
}

double true_var(double mu_hat, double s_nu, double nu, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("true_var: alpha must lie in (0,1)");
  }
  if (!(s_nu > 0.0) || !std::isfinite(s_nu)) {
    throw std::domain_error("true_var: s_nu must be > 0");
  }
  return -(mu_hat + s_nu * student_t_quantile(nu, 1.0 - alpha));
}

}  // namespace tailrisk
