#pragma once

#include <vector>

namespace tailrisk::lp {

enum class Sense { minimize, maximize };

enum class Status { optimal, infeasible, unbounded, numerical_failure };

/// min/max objective . x  subject to  eq_matrix x = eq_rhs, x >= 0.
/// Requires no more constraints than variables and finite entries.
struct LinearProgram {
  std::vector<double> objective;
  Sense sense = Sense::minimize;
  std::vector<std::vector<double>> eq_matrix;
  std::vector<double> eq_rhs;
};

/// Outcome of a solve. `certificate_norm` is the largest constraint residual
/// |Ax - b| at the solution after row equilibration when optimal, and the
/// phase-1 infeasibility level when status == infeasible (kept for audit).
struct LPOutcome {
  Status status = Status::numerical_failure;
  double value = 0.0;
  std::vector<double> solution;
  double certificate_norm = 0.0;
};

const char* to_string(Status status);

/// Dense two-phase primal simplex with Bland's anti-cycling rule. Rows are
/// scaled to unit max-abs before solving. Deterministic: identical inputs
/// produce bit-identical outcomes.
LPOutcome solve(const LinearProgram& prob);

}  // namespace tailrisk::lp
