#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tailrisk/calibration.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/errors.hpp"
#include "tailrisk/moment_bounds.hpp"

using namespace tailrisk;

namespace {

MomentVector mv(std::vector<double> values) {
  MomentVector m;
  m.order = static_cast<int>(values.size());
  m.values = std::move(values);
  return m;
}

LossGrid grid_of(std::vector<double> pts) {
  LossGrid g;
  g.points = std::move(pts);
  return g;
}

// Exact moments and CDF of a known discrete distribution on the grid; used
// as the envelope-sandwich oracle.
struct DiscreteDist {
  std::vector<double> p;
  std::vector<double> moments(int d, const LossGrid& g) const {
    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    for (int r = 1; r <= d; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        s += p[i] * std::pow(g.points[i], r);
      }
      out[static_cast<std::size_t>(r) - 1] = s;
    }
    return out;
  }
  double cdf(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i <= j; ++i) s += p[i];
    return s;
  }
};

}  // namespace

TEST_CASE("build_grid frozen three-point case") {
  const LossGrid g = build_grid(NominalModel(0.0, 1.0), 2, 1.0);
  REQUIRE(g.points.size() == 3);
  CHECK(g.points[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(g.points[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g.points[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("build_grid centers on the loss mean and spans sigma units") {
  const NominalModel m(0.0005, 0.011);
  const LossGrid g = build_grid(m, 200, 8.0);
  REQUIRE(g.points.size() == 201);
  CHECK(g.points.front() == doctest::Approx(-0.0005 - 8.0 * 0.011).epsilon(1e-12));
  CHECK(g.points.back() == doctest::Approx(-0.0005 + 8.0 * 0.011).epsilon(1e-12));
  CHECK(g.points[100] == doctest::Approx(-0.0005).epsilon(1e-12));
  CHECK_THROWS_AS(build_grid(m, 0, 8.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(m, 10, 0.0), std::invalid_argument);
}

TEST_CASE("raw_moments on a tiny sample") {
  const std::vector<double> losses{1.0, 2.0, 3.0};
  const MomentVector m = raw_moments(losses, 2);
  CHECK(m.order == 2);
  CHECK(m.values[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m.values[1] == doctest::Approx(14.0 / 3.0).epsilon(1e-15));

  CHECK_THROWS_AS(raw_moments(losses, 0), std::invalid_argument);
  CHECK_THROWS_AS(raw_moments(std::vector<double>{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(raw_moments(std::vector<double>{1.0, std::nan("")}, 1),
                  std::domain_error);
  // Constant sample has zero implied variance at d >= 2.
  CHECK_THROWS_AS(raw_moments(std::vector<double>{2.0, 2.0}, 2),
                  std::domain_error);
  CHECK_NOTHROW(raw_moments(std::vector<double>{2.0, 2.0}, 1));
}

TEST_CASE("analytic Gaussian moments, standard and shifted") {
  const MomentVector std_m = analytic_gaussian_moments(NominalModel(0.0, 1.0), 4);
  CHECK(std_m.values[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std_m.values[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std_m.values[2] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std_m.values[3] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(std_m.source == MomentSource::analytic_gaussian);

  // Loss of R ~ N(0.1, 4) is N(-0.1, 4); raw moments by direct expansion.
  const MomentVector m = analytic_gaussian_moments(NominalModel(0.1, 2.0), 4);
  CHECK(m.values[0] == doctest::Approx(-0.1).epsilon(1e-14));
  CHECK(m.values[1] == doctest::Approx(4.01).epsilon(1e-14));
  CHECK(m.values[2] == doctest::Approx(-1.201).epsilon(1e-13));
  CHECK(m.values[3] == doctest::Approx(48.2401).epsilon(1e-13));
}

TEST_CASE("analytic and sampled moments agree at scale") {
  const NominalModel model(0.0005, 0.011);
  const MomentVector exact = analytic_gaussian_moments(model, 4);
  const std::vector<double> rs =
      sample_normal(NormalParams(model.mu_hat, model.sigma_hat), 400000,
                    Seed{21});
  std::vector<double> losses(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) losses[i] = -rs[i];
  const MomentVector sampled = raw_moments(losses, 4);
  CHECK(sampled.values[0] == doctest::Approx(exact.values[0]).epsilon(0.2));
  CHECK(sampled.values[1] == doctest::Approx(exact.values[1]).epsilon(0.02));
  CHECK(sampled.values[3] == doctest::Approx(exact.values[3]).epsilon(0.05));
}

TEST_CASE("two-point grid with a first moment pins the CDF") {
  const LossGrid g = grid_of({0.0, 1.0});
  const CdfEnvelope env = cdf_envelope(g, mv({0.3}));
  REQUIRE(env.feasible);
  // p1 = 0.3 forced, so F(0) = 0.7 on both envelopes and F(1) = 1.
  CHECK(env.lower[0] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(env.upper[0] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(env.lower[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(env.upper[1] == doctest::Approx(1.0).epsilon(1e-12));

  const VarBracket b = var_bounds(env, 0.6);
  CHECK(b.feasible);
  CHECK(b.lower == 0.0);
  CHECK(b.upper == 0.0);

  const VarBracket c = var_bounds(env, 0.8);
  CHECK(c.lower == 1.0);
  CHECK(c.upper == 1.0);
}

TEST_CASE("symmetric two-moment system forces the half-half vertex") {
  const LossGrid g = grid_of({-1.0, 0.0, 1.0});
  const CdfEnvelope env = cdf_envelope(g, mv({0.0, 1.0}));
  REQUIRE(env.feasible);
  // Unique solution p = (1/2, 0, 1/2).
  CHECK(env.lower[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(env.upper[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(env.lower[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(env.upper[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(env.upper[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("impossible moments are infeasible with a positive residual") {
  const LossGrid g = grid_of({-1.0, 0.0, 1.0});
  // E[X^2] = 2 cannot happen on [-1, 1].
  const CdfEnvelope env = cdf_envelope(g, mv({0.0, 2.0}));
  CHECK_FALSE(env.feasible);
  CHECK_THROWS_AS(var_bounds(env, 0.99), std::invalid_argument);

  const VarBracket b = bracket_at_order(g, mv({0.0, 2.0}), 0.99);
  CHECK_FALSE(b.feasible);
  CHECK(b.phase1_residual > 1e-3);
  CHECK_THROWS_AS(bracket_midpoint(b), std::domain_error);
  CHECK_THROWS_AS(bracket_width(b), std::domain_error);
}

TEST_CASE("envelope sandwiches every distribution sharing the moments") {
  std::mt19937_64 gen(99);
  std::exponential_distribution<double> expd(1.0);
  const LossGrid g = build_grid(NominalModel(0.0, 1.0), 24, 3.0);
  const std::size_t npts = g.points.size();

  for (int trial = 0; trial < 8; ++trial) {
    DiscreteDist q;
    q.p.resize(npts);
    double s = 0.0;
    for (double& v : q.p) {
      v = expd(gen);
      s += v;
    }
    for (double& v : q.p) v /= s;

    for (int d = 1; d <= 4; ++d) {
      const CdfEnvelope env = cdf_envelope(g, mv(q.moments(d, g)));
      REQUIRE(env.feasible);
      for (std::size_t j = 0; j < npts; ++j) {
        CHECK(env.lower[j] <= q.cdf(j) + 1e-7);
        CHECK(env.upper[j] >= q.cdf(j) - 1e-7);
        CHECK(env.lower[j] <= env.upper[j] + 1e-9);
      }
      // The bracket must contain q's own alpha-quantile.
      const double alpha = 0.9;
      const VarBracket b = var_bounds(env, alpha);
      std::size_t qi = 0;
      while (q.cdf(qi) < alpha - 1e-12) ++qi;
      CHECK(b.lower <= g.points[qi] + 1e-12);
      CHECK(b.upper >= g.points[qi] - 1e-12);
    }
  }
}

TEST_CASE("envelopes tighten monotonically in the moment order") {
  const NominalModel model(0.0005, 0.011);
  const LossGrid g = build_grid(model, 60, 6.0);
  const MomentVector full = analytic_gaussian_moments(model, 5);

  CdfEnvelope prev;
  for (int d = 1; d <= 5; ++d) {
    MomentVector m;
    m.order = d;
    m.values.assign(full.values.begin(), full.values.begin() + d);
    const CdfEnvelope env = cdf_envelope(g, m);
    REQUIRE(env.feasible);
    if (d > 1) {
      for (std::size_t j = 0; j < env.thresholds.size(); ++j) {
        CHECK(env.lower[j] >= prev.lower[j] - 1e-7);
        CHECK(env.upper[j] <= prev.upper[j] + 1e-7);
      }
    }
    prev = env;
  }
}

TEST_CASE("brackets nest and contain the closed-form VaR (analytic moments)") {
  const NominalModel model(0.0005, 0.011);
  const LossGrid g = build_grid(model, 120, 8.0);
  const MomentVector full = analytic_gaussian_moments(model, 6);
  const double alpha = 0.99;
  const double closed_form = gaussian_var(model, alpha);

  const std::vector<VarBracket> sweep = moment_sweep(g, full, alpha, 6);
  double prev_lo = -1e300;
  double prev_hi = 1e300;
  for (const VarBracket& b : sweep) {
    REQUIRE(b.feasible);
    CHECK(b.lower >= prev_lo - 1e-12);
    CHECK(b.upper <= prev_hi + 1e-12);
    CHECK(b.lower <= closed_form);
    CHECK(b.upper >= closed_form);
    CHECK(bracket_width(b) >= 0.0);
    prev_lo = b.lower;
    prev_hi = b.upper;
  }
  // Higher orders genuinely inform: the d = 6 bracket is strictly tighter
  // than the d = 1 bracket.
  CHECK(bracket_width(sweep.back()) < bracket_width(sweep.front()));
}

TEST_CASE("bracket_at_order agrees with the full-envelope inversion") {
  const NominalModel model(0.0, 0.01);
  const LossGrid g = build_grid(model, 80, 6.0);
  const MomentVector full = analytic_gaussian_moments(model, 4);
  for (double alpha : {0.9, 0.95, 0.99}) {
    for (int d = 1; d <= 4; ++d) {
      MomentVector m;
      m.order = d;
      m.values.assign(full.values.begin(), full.values.begin() + d);
      const VarBracket fast = bracket_at_order(g, m, alpha);
      const VarBracket slow = var_bounds(cdf_envelope(g, m), alpha);
      REQUIRE(fast.feasible);
      CHECK(fast.lower == slow.lower);
      CHECK(fast.upper == slow.upper);
    }
  }
}

TEST_CASE("moment_sweep stops at and reports the infeasible frontier") {
  const LossGrid g = grid_of({-1.0, 0.0, 1.0});
  // First two moments are fine; the third (E[X^3] = 0.9) contradicts
  // E[X^2] = 0.25 on {-1,0,1} (|E X^3| <= E X^2 there).
  MomentVector m = mv({0.0, 0.25, 0.9});
  const std::vector<VarBracket> sweep = moment_sweep(g, m, 0.9, 3);
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[0].feasible);
  CHECK(sweep[1].feasible);
  CHECK_FALSE(sweep[2].feasible);
  CHECK(sweep[2].phase1_residual > 0.0);
  CHECK(sweep[2].moment_order == 3);
}

TEST_CASE("input validation") {
  const LossGrid g = grid_of({0.0, 1.0});
  CHECK_THROWS_AS(cdf_envelope(grid_of({1.0}), mv({0.3})),
                  std::invalid_argument);
  CHECK_THROWS_AS(cdf_envelope(grid_of({1.0, 0.5}), mv({0.3})),
                  std::invalid_argument);
  CHECK_THROWS_AS(cdf_envelope(g, mv({})), std::invalid_argument);
  CHECK_THROWS_AS(cdf_envelope(g, mv({0.5, 0.25})), std::domain_error);
  CHECK_THROWS_AS(bracket_at_order(g, mv({0.3}), 0.0), std::domain_error);
  CHECK_THROWS_AS(bracket_at_order(g, mv({0.3}), 1.0), std::domain_error);
  CHECK_THROWS_AS(moment_sweep(g, mv({0.3}), 0.9, 2), std::invalid_argument);
  CHECK_THROWS_AS(moment_sweep(g, mv({0.3}), 0.9, 0), std::invalid_argument);

  CdfEnvelope low;
  low.moment_order = 1;
  low.thresholds = {0.0, 1.0};
  low.lower = {0.0, 0.1};
  low.upper = {0.1, 0.2};
  low.statuses = {lp::Status::optimal, lp::Status::optimal};
  low.feasible = true;
  CHECK_THROWS_AS(var_bounds(low, 0.9), GridTooShortError);
}
