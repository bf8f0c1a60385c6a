#pragma once

#include <cstddef>
#include <vector>

#include "tailrisk/rng.hpp"

namespace tailrisk {

/// Gaussian location/scale pair in log-return units.
struct NormalParams {
  double mu;
  double sigma;  // strictly positive
  NormalParams(double mu, double sigma);
};

/// Location/scale Student-t. The type requires nu > 2 so that the variance
/// exists and variance matching is well defined; the free quantile/CDF
/// functions below accept any nu > 0.
struct StudentTParams {
  double nu;
  double loc;
  double scale;  // strictly positive
  StudentTParams(double nu, double loc, double scale);
};

double normal_pdf(double z);
double normal_cdf(double z);

/// Inverse standard normal CDF (Wichura's rational approximation).
/// |Phi(result) - u| <= 1e-12 across (0,1); throws std::domain_error outside.
double normal_quantile(double u);

double student_t_pdf(double nu, double x);

/// Student-t CDF via the regularized incomplete beta function.
double student_t_cdf(double nu, double x);

/// Quantile of the unit-scale Student-t with nu degrees of freedom.
/// Antisymmetric about u = 0.5; inverted numerically (safeguarded Newton on
/// the CDF) to a relative bracket width of 1e-10.
double student_t_quantile(double nu, double u);

/// n i.i.d. Gaussian draws by inverse-CDF transform of the SplitMix64
/// uniform stream: a pure function of (params, n, seed).
std::vector<double> sample_normal(const NormalParams& params, std::size_t n,
                                  Seed seed);

/// n i.i.d. draws of loc + scale * T_nu using the same uniform stream design
/// as sample_normal, so streams with equal seeds stay aligned draw-by-draw.
std::vector<double> sample_student_t(const StudentTParams& params,
                                     std::size_t n, Seed seed);

namespace detail {

/// Regularized incomplete beta I_x(a,b) by Lentz's continued fraction.
/// `cx` must equal 1-x; it is passed separately so callers can supply a
/// cancellation-free value when x is close to 1.
double regularized_incomplete_beta(double x, double cx, double a, double b);

}  // namespace detail
}  // namespace tailrisk
