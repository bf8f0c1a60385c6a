#pragma once

#include <stdexcept>
#include <string>

namespace tailrisk {

/// An importance weight whose log exceeds the exponentiable range. Thrown
/// instead of silently producing an infinite weight.
class WeightOverflowError : public std::runtime_error {
 public:
  explicit WeightOverflowError(double log_weight)
      : std::runtime_error("importance weight overflow: log-weight " +
                           std::to_string(log_weight) +
                           " exceeds the exponentiable range"),
        log_weight_(log_weight) {}
  double log_weight() const noexcept { return log_weight_; }

 private:
  double log_weight_;
};

/// No valid root bracket could be established, even after expansion.
class BracketingError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bisection hit its iteration cap; carries the last bracket reached.
class BisectionConvergenceError : public std::runtime_error {
 public:
  BisectionConvergenceError(double lo, double hi, int iterations)
      : std::runtime_error("bisection did not converge after " +
                           std::to_string(iterations) +
                           " iterations; last bracket [" + std::to_string(lo) +
                           ", " + std::to_string(hi) + "]"),
        lo_(lo),
        hi_(hi),
        iterations_(iterations) {}
  double bracket_lo() const noexcept { return lo_; }
  double bracket_hi() const noexcept { return hi_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double lo_, hi_;
  int iterations_;
};

/// The requested quantile level is not reachable on the loss grid.
class GridTooShortError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A sample that cannot support the requested fit (too short, or zero
/// variance such as a constant return series).
class DegenerateSampleError : public std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace tailrisk
