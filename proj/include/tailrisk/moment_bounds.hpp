#pragma once

#include <span>
#include <vector>

#include "tailrisk/calibration.hpp"
#include "tailrisk/lp_solver.hpp"

namespace tailrisk {

/// Ordered discretization support for the loss variable.
struct LossGrid {
  std::vector<double> points;  // strictly increasing, at least two entries
};

enum class MomentSource { analytic_gaussian, nominal_sample };

/// First `order` raw moments of the loss variable; mu_0 = 1 is implied and
/// not stored. values[r-1] holds E[L^r].
struct MomentVector {
  int order = 0;
  std::vector<double> values;
  MomentSource source = MomentSource::nominal_sample;
};

/// Pointwise extremal CDF values over all grid-supported distributions that
/// match the given moments: lower[j] <= F(x_j) <= upper[j] for every member
/// of the moment class.
struct CdfEnvelope {
  int moment_order = 0;
  std::vector<double> thresholds;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<lp::Status> statuses;  // worst LP status per threshold
  bool feasible = false;
};

/// Certified value-at-risk interval at one moment order.
struct VarBracket {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.0;
  int moment_order = 0;
  bool feasible = false;
  // When !feasible: the phase-1 optimum for a clean infeasibility
  // certificate, or the uncertified solution's residual when the LP broke
  // down numerically. Either way the order is past the usable frontier.
  double phase1_residual = 0.0;
};

/// Uniform grid of m+1 points spanning span standard deviations either side
/// of the nominal loss mean -mu_hat.
LossGrid build_grid(const NominalModel& model, int m, double span);

/// Sample raw moments E[L^r], r = 1..d. Throws on non-finite input or a
/// non-positive implied variance.
MomentVector raw_moments(std::span<const double> losses, int d);

/// Exact raw moments of the nominal Gaussian loss -R, R ~ N(mu_hat, sigma^2).
MomentVector analytic_gaussian_moments(const NominalModel& model, int d);

/// Extremal CDF envelope: two LPs (min and max of the CDF prefix) per grid
/// threshold. Per-threshold solves run concurrently; results are assembled in
/// threshold order so output is deterministic. If any threshold LP reports
/// infeasible or cannot be certified, the whole envelope is marked
/// infeasible (the constraint system is the same at every threshold).
CdfEnvelope cdf_envelope(const LossGrid& grid, const MomentVector& moments);

/// Left-continuous inversion of the envelope at level alpha. The upper
/// envelope crosses alpha first, so it yields the bracket's lower endpoint,
/// and the lower envelope yields the upper endpoint.
VarBracket var_bounds(const CdfEnvelope& envelope, double alpha);

/// Bracket at a single moment order without materializing the full envelope:
/// one feasibility solve, then binary search of each monotone envelope for
/// its alpha crossing. Agrees with var_bounds(cdf_envelope(...), alpha).
VarBracket bracket_at_order(const LossGrid& grid, const MomentVector& moments,
                            double alpha);

/// Brackets for d = 1..d_max using prefixes of one moment vector. Stops at
/// the first order that is infeasible or numerically unsolvable, which is
/// included in the result (with its residual) so the feasibility frontier
/// d* = last feasible order is auditable.
std::vector<VarBracket> moment_sweep(const LossGrid& grid,
                                     const MomentVector& moments_full,
                                     double alpha, int d_max);

/// Midpoint point-estimate of a feasible bracket.
double bracket_midpoint(const VarBracket& bracket);

/// Width upper - lower of a feasible bracket.
double bracket_width(const VarBracket& bracket);

}  // namespace tailrisk
