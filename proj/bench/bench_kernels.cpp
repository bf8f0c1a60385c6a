// Wall-time comparison of the OpenMP kernels against their serial reference
// implementations, on the workloads the estimators actually run.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tailrisk/distributions.hpp"
#include "tailrisk/importance_sampling.hpp"
#include "tailrisk/kernels.hpp"
#include "tailrisk/rng.hpp"

using namespace tailrisk;
using Clock = std::chrono::steady_clock;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    fn();
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    if (dt < best) best = dt;
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx\n", name, serial_s * 1e3,
              parallel_s * 1e3, serial_s / parallel_s);
}

volatile double g_sink = 0.0;

}  // namespace

int main() {
  const std::size_t n = 4'000'000;
  const Seed seed{99};
  const NormalParams normal{0.0005, 0.011};

#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both columns run serially\n");
#endif
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  // Element-wise fill: normal quantile transform of a counter stream.
  std::vector<double> buf(n);
  const auto draw = [&](std::size_t i) {
    return normal.mu +
           normal.sigma * normal_quantile(rng::uniform01_at(seed, i));
  };
  const double fill_serial =
      time_best_of(3, [&] { kernels::serial::fill(buf, draw); });
  const double fill_parallel =
      time_best_of(3, [&] { kernels::parallel_fill(buf, draw); });
  report("normal_fill", fill_serial, fill_parallel);

  // Single blocked reduction: tail indicator times likelihood ratio.
  const NominalModel model(0.0005, 0.011);
  const double theta = tilt_from_pilot(model, 0.99).theta;
  const double x = gaussian_var(model, 0.99);
  const auto weight_term = [&](std::size_t i) {
    const double r = buf[i];
    return r < -x ? likelihood_ratio(model, theta, r) : 0.0;
  };
  const double sum_serial = time_best_of(
      3, [&] { g_sink = kernels::serial::sum(n, weight_term); });
  const double sum_parallel =
      time_best_of(3, [&] { g_sink = kernels::blocked_sum(n, weight_term); });
  report("weighted_tail_sum", sum_serial, sum_parallel);

  // Multi-accumulator reduction: raw moment sums to order 8.
  const std::size_t d = 8;
  const auto powers = [&](std::size_t i, double* a) {
    double p = 1.0;
    for (std::size_t r = 0; r < d; ++r) {
      p *= buf[i];
      a[r] += p;
    }
  };
  const double sums_serial = time_best_of(
      3, [&] { g_sink = kernels::serial::sums(n, d, powers)[0]; });
  const double sums_parallel = time_best_of(
      3, [&] { g_sink = kernels::blocked_sums(n, d, powers)[0]; });
  report("moment_sums_d8", sums_serial, sums_parallel);

  // Max reduction: largest log-weight, the overflow guard's inner loop.
  const auto log_w = [&](std::size_t i) {
    return log_likelihood_ratio(model, theta, buf[i]);
  };
  const double max_serial =
      time_best_of(3, [&] { g_sink = kernels::serial::max(n, log_w); });
  const double max_parallel =
      time_best_of(3, [&] { g_sink = kernels::blocked_max(n, log_w); });
  report("max_log_weight", max_serial, max_parallel);

  return 0;
}
