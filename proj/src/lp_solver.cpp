#include "tailrisk/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace tailrisk::lp {
namespace {

constexpr double kPivotEps = 1e-9;    // reduced-cost / pivot threshold
constexpr double kFeasTol = 1e-8;     // phase-1 optimum above this: infeasible
constexpr double kResidualTol = 1e-7; // residual bound at a reported optimum
constexpr int kMaxPivots = 50000;     // backstop against stalls

struct Tableau {
  std::size_t ncols = 0;               // structural + artificial columns
  std::vector<std::vector<double>> row;  // m rows of ncols+1 (rhs last)
  std::vector<double> cost;              // reduced costs; last = -objective
  std::vector<int> basis;                // basis[i] = column basic in row i

  static void eliminate(std::vector<double>& target,
                        const std::vector<double>& prow, std::size_t pc) {
    const double f = target[pc];
    if (f == 0.0) return;
    for (std::size_t j = 0; j < target.size(); ++j) target[j] -= f * prow[j];
    target[pc] = 0.0;  // kill elimination round-off in the pivot column
  }

  void pivot(std::size_t pr, std::size_t pc) {
    auto& prow = row[pr];
    const double inv = 1.0 / prow[pc];
    for (auto& v : prow) v *= inv;
    prow[pc] = 1.0;
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (r != pr) eliminate(row[r], prow, pc);
    }
    eliminate(cost, prow, pc);
    basis[pr] = static_cast<int>(pc);
  }
};

enum class IterStatus { optimal, unbounded, limit };

// Primal simplex iterations under Bland's rule: entering column is the
// lowest index with a negative reduced cost, leaving row breaks ratio ties
// by the lowest basis label. Only columns below enter_cols may enter.
IterStatus run_simplex(Tableau& t, std::size_t enter_cols, int& budget) {
  const std::size_t m = t.row.size();
  for (;;) {
    if (budget-- <= 0) return IterStatus::limit;
    std::size_t pc = enter_cols;
    for (std::size_t j = 0; j < enter_cols; ++j) {
      if (t.cost[j] < -kPivotEps) {
        pc = j;
        break;
      }
    }
    if (pc == enter_cols) return IterStatus::optimal;
    std::size_t pr = m;
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = t.row[i][pc];
      if (a > kPivotEps) {
        const double ratio = t.row[i].back() / a;
        if (pr == m || ratio < best - 1e-12 ||
            (std::fabs(ratio - best) <= 1e-12 && t.basis[i] < t.basis[pr])) {
          pr = i;
          best = ratio;
        }
      }
    }
    if (pr == m) return IterStatus::unbounded;
    t.pivot(pr, pc);
  }
}

void validate(const LinearProgram& prob) {
  const std::size_t n = prob.objective.size();
  if (n == 0) {
    throw std::invalid_argument("LinearProgram: needs at least one variable");
  }
  if (prob.eq_matrix.size() != prob.eq_rhs.size()) {
    throw std::invalid_argument(
        "LinearProgram: constraint matrix and rhs sizes differ");
  }
  for (double c : prob.objective) {
    if (!std::isfinite(c)) {
      throw std::invalid_argument("LinearProgram: non-finite objective entry");
    }
  }
  for (std::size_t i = 0; i < prob.eq_matrix.size(); ++i) {
    if (prob.eq_matrix[i].size() != n) {
      throw std::invalid_argument("LinearProgram: row " + std::to_string(i) +
                                  " has wrong width");
    }
    for (double v : prob.eq_matrix[i]) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("LinearProgram: non-finite matrix entry");
      }
    }
    if (!std::isfinite(prob.eq_rhs[i])) {
      throw std::invalid_argument("LinearProgram: non-finite rhs entry");
    }
  }
}

}  // namespace

const char* to_string(Status status) {
  switch (status) {
    case Status::optimal:
      return "optimal";
    case Status::infeasible:
      return "infeasible";
    case Status::unbounded:
      return "unbounded";
    case Status::numerical_failure:
      return "numerical_failure";
  }
  return "unknown";
}

LPOutcome solve(const LinearProgram& prob) {
  validate(prob);
  const std::size_t n = prob.objective.size();

  // Row equilibration: scale every constraint to unit max-abs so the
  // feasibility and residual tolerances mean the same thing at any moment
  // order. Zero rows are dropped (0 = 0) or certify infeasibility (0 = b).
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  for (std::size_t i = 0; i < prob.eq_matrix.size(); ++i) {
    double s = 0.0;
    for (double v : prob.eq_matrix[i]) s = std::max(s, std::fabs(v));
    if (s == 0.0) {
      if (std::fabs(prob.eq_rhs[i]) > kFeasTol) {
        return {Status::infeasible, 0.0, {}, std::fabs(prob.eq_rhs[i])};
      }
      continue;
    }
    std::vector<double> r(n);
    for (std::size_t j = 0; j < n; ++j) r[j] = prob.eq_matrix[i][j] / s;
    double rb = prob.eq_rhs[i] / s;
    if (rb < 0.0) {
      for (auto& v : r) v = -v;
      rb = -rb;
    }
    a.push_back(std::move(r));
    b.push_back(rb);
  }
  const std::size_t m = a.size();

  int budget = kMaxPivots;
  Tableau t;
  t.ncols = n + m;
  t.row.assign(m, std::vector<double>(n + m + 1, 0.0));
  t.basis.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t.row[i][j] = a[i][j];
    t.row[i][n + i] = 1.0;
    t.row[i].back() = b[i];
    t.basis[i] = static_cast<int>(n + i);
  }

  // Phase 1: minimize the artificial sum, priced out against the identity
  // artificial basis.
  t.cost.assign(n + m + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += a[i][j];
    t.cost[j] = -s;
  }
  double bsum = 0.0;
  for (double v : b) bsum += v;
  t.cost.back() = -bsum;

  IterStatus st = run_simplex(t, n + m, budget);
  if (st != IterStatus::optimal) {
    // Phase 1 is bounded below by zero, so anything else is a stall.
    return {Status::numerical_failure, 0.0, {}, 0.0};
  }
  const double phase1 = -t.cost.back();
  if (phase1 > kFeasTol) {
    return {Status::infeasible, 0.0, {}, std::max(phase1, 0.0)};
  }

  // Drive any zero-level artificial out of the basis; a row with no
  // structural pivot left is a dependent constraint and is dropped.
  for (std::size_t i = 0; i < t.row.size();) {
    if (t.basis[i] < static_cast<int>(n)) {
      ++i;
      continue;
    }
    std::size_t pc = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::fabs(t.row[i][j]) > kPivotEps) {
        pc = j;
        break;
      }
    }
    if (pc < n) {
      t.pivot(i, pc);
      ++i;
    } else {
      t.row.erase(t.row.begin() + static_cast<std::ptrdiff_t>(i));
      t.basis.erase(t.basis.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }

  // Phase 2: the original objective in min form, priced out against the
  // phase-1 basis. Artificial columns may no longer enter.
  std::vector<double> c(n);
  for (std::size_t j = 0; j < n; ++j) {
    c[j] = prob.sense == Sense::maximize ? -prob.objective[j]
                                         : prob.objective[j];
  }
  t.cost.assign(t.ncols + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) t.cost[j] = c[j];
  for (std::size_t i = 0; i < t.row.size(); ++i) {
    const double cb = c[static_cast<std::size_t>(t.basis[i])];
    if (cb != 0.0) {
      for (std::size_t j = 0; j < t.cost.size(); ++j) {
        t.cost[j] -= cb * t.row[i][j];
      }
    }
  }
  st = run_simplex(t, n, budget);
  if (st == IterStatus::limit) return {Status::numerical_failure, 0.0, {}, 0.0};
  if (st == IterStatus::unbounded) return {Status::unbounded, 0.0, {}, 0.0};

  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < t.row.size(); ++i) {
    if (t.basis[i] < static_cast<int>(n)) {
      x[static_cast<std::size_t>(t.basis[i])] = t.row[i].back();
    }
  }
  double value = -t.cost.back();
  if (prob.sense == Sense::maximize) value = -value;

  double cert = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += a[i][j] * x[j];
    cert = std::max(cert, std::fabs(dot - b[i]));
  }
  double minx = 0.0;
  for (double v : x) minx = std::min(minx, v);
  if (cert > kResidualTol || minx < -1e-9) {
    return {Status::numerical_failure, value, std::move(x), cert};
  }
  return {Status::optimal, value, std::move(x), cert};
}

}  // namespace tailrisk::lp
