#include "tailrisk/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tailrisk/kernels.hpp"

namespace tailrisk {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require_probability(double u, const char* what) {
  if (!(u > 0.0) || !(u < 1.0)) {
    throw std::domain_error(std::string(what) +
                            " must lie strictly inside (0,1)");
  }
}

// Wichura's algorithm AS 241 (PPND16): rational approximations to the
// inverse standard normal CDF, accurate to about 1e-16 in the quantile.
double ppnd16(double u) {
  const double q = u - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) *
                 r +
             4.5921953931549871457e4) *
                r +
            1.3731693765509461125e4) *
               r +
           1.9715909503065514427e3) *
              r +
          1.3314166789178437745e2) *
             r +
         3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) *
                 r +
             2.1213794301586595867e4) *
                r +
            5.3941960214247511077e3) *
               r +
           6.8718700749205790830e2) *
              r +
          4.2313330701600911252e1) *
             r +
         1.0);
    return q * num / den;
  }
  double r = (q < 0.0) ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e0) *
                r +
            3.64784832476320460504e0) *
               r +
           5.76949722146069140550e0) *
              r +
          4.63033784615654529590e0) *
             r +
         1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e0) *
              r +
          2.05319162663775882187e0) *
             r +
         1.0);
    z = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e0) *
              r +
          5.46378491116411436990e0) *
             r +
         6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                  r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
    z = num / den;
  }
  return (q < 0.0) ? -z : z;
}

// Continued fraction for the incomplete beta function, evaluated with the
// modified Lentz method. Converges rapidly for x < (a+1)/(a+b+2).
double beta_cf(double x, double a, double b) {
  constexpr int kMaxIter = 20000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

void require_dof(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw std::domain_error("degrees of freedom must be positive and finite");
  }
}

}  // namespace

NormalParams::NormalParams(double mu_, double sigma_) : mu(mu_), sigma(sigma_) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0)) {
    throw std::domain_error("NormalParams requires finite mu and sigma > 0");
  }
}

StudentTParams::StudentTParams(double nu_, double loc_, double scale_)
    : nu(nu_), loc(loc_), scale(scale_) {
  if (!std::isfinite(nu) || !(nu > 2.0)) {
    throw std::domain_error(
        "StudentTParams requires nu > 2 so the variance exists");
  }
  if (!std::isfinite(loc) || !std::isfinite(scale) || !(scale > 0.0)) {
    throw std::domain_error("StudentTParams requires finite loc and scale > 0");
  }
}

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_quantile(double u) {
  require_probability(u, "quantile level");
  return ppnd16(u);
}

double student_t_pdf(double nu, double x) {
  require_dof(nu);
  const double lg = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                    0.5 * std::log(nu * std::numbers::pi);
  return std::exp(lg - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

double student_t_cdf(double nu, double x) {
  require_dof(nu);
  if (std::isnan(x)) throw std::domain_error("student_t_cdf: x is NaN");
  if (std::isinf(x)) return x > 0.0 ? 1.0 : 0.0;
  // I_w(nu/2, 1/2) with w = nu/(nu + x^2); 1-w is formed directly from x to
  // avoid cancellation when x is small and w is close to 1.
  const double w = nu / (nu + x * x);
  const double cw = (x * x) / (nu + x * x);
  const double tail =
      0.5 * detail::regularized_incomplete_beta(w, cw, 0.5 * nu, 0.5);
  return x >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double nu, double u) {
  require_dof(nu);
  require_probability(u, "quantile level");
  if (u == 0.5) return 0.0;
  if (u < 0.5) return -student_t_quantile(nu, 1.0 - u);
  if (nu == 1.0) {
    // Cauchy closed form.
    return std::tan(std::numbers::pi * (u - 0.5));
  }
  // Initial guess from the Gaussian quantile, variance-inflated when defined.
  const double z = ppnd16(u);
  double x = (nu > 2.0) ? z * std::sqrt(nu / (nu - 2.0)) : z;
  double lo = 0.0;           // F(0) = 0.5 < u
  double hi = std::max(2.0, 2.0 * x);
  while (student_t_cdf(nu, hi) < u && hi < 1e300) hi *= 2.0;
  x = std::min(std::max(x, lo), hi);
  // Safeguarded Newton: fall back to bisection whenever the Newton step
  // leaves the current bracket.
  for (int it = 0; it < 200; ++it) {
    const double cdf = student_t_cdf(nu, x);
    if (cdf > u) {
      hi = x;
    } else {
      lo = x;
    }
    const double pdf = student_t_pdf(nu, x);
    double next = (pdf > 0.0) ? x - (cdf - u) / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-10 * std::max(1.0, std::fabs(next))) {
      return next;
    }
    x = next;
  }
  return x;
}

std::vector<double> sample_normal(const NormalParams& params, std::size_t n,
                                  Seed seed) {
  if (n == 0) throw std::invalid_argument("sample count must be at least 1");
  std::vector<double> out(n);
  kernels::parallel_fill(out, [&](std::size_t i) {
    return params.mu + params.sigma * ppnd16(rng::uniform01_at(seed, i));
  });
  return out;
}

std::vector<double> sample_student_t(const StudentTParams& params,
                                     std::size_t n, Seed seed) {
  if (n == 0) throw std::invalid_argument("sample count must be at least 1");
  std::vector<double> out(n);
  kernels::parallel_fill(out, [&](std::size_t i) {
    return params.loc +
           params.scale * student_t_quantile(params.nu, rng::uniform01_at(seed, i));
  });
  return out;
}

namespace detail {

double regularized_incomplete_beta(double x, double cx, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::domain_error("incomplete beta requires a > 0 and b > 0");
  }
  if (x <= 0.0) return 0.0;
  if (cx <= 0.0) return 1.0;
  const double lbeta =
      std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double front = std::exp(a * std::log(x) + b * std::log(cx) - lbeta);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(x, a, b) / a;
  }
  return 1.0 - front * beta_cf(cx, b, a) / b;
}

}  // namespace detail
}  // namespace tailrisk
