#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tailrisk::kernels {

// Fixed accumulation block. Partial sums are always formed per block and the
// block results combined in block order, so every reduction below returns
// bit-identical values no matter how many OpenMP threads execute it (the
// block layout depends only on n, never on the thread count).
inline constexpr std::size_t kBlock = 4096;

/// out[i] = f(i), computed element-wise in parallel. Deterministic because
/// each slot is written exactly once from a pure function of i.
template <class F>
void parallel_fill(std::span<double> out, F&& f) {
  const std::int64_t n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
  }
}

/// Deterministic parallel reduction of f(0) + ... + f(n-1).
template <class F>
double blocked_sum(std::size_t n, F&& f) {
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(nblocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

/// k simultaneous deterministic reductions in one pass over the data.
/// f(i, acc) must add the i-th contribution into acc[0..k).
template <class F>
std::vector<double> blocked_sums(std::size_t n, std::size_t k, F&& f) {
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks * k, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(nblocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    double* acc = &partial[static_cast<std::size_t>(b) * k];
    for (std::size_t i = lo; i < hi; ++i) f(i, acc);
  }
  std::vector<double> total(k, 0.0);
  for (std::size_t b = 0; b < nblocks; ++b) {
    for (std::size_t j = 0; j < k; ++j) total[j] += partial[b * k + j];
  }
  return total;
}

/// Parallel maximum of f(i). Floating max is associative and commutative, so
/// a plain reduction is already thread-count independent.
template <class F>
double blocked_max(std::size_t n, F&& f) {
  double best = -1.7976931348623157e308;
#pragma omp parallel for schedule(static) reduction(max : best)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    best = std::max(best, f(static_cast<std::size_t>(i)));
  }
  return best;
}

// Plain single-threaded reference implementations. Kept so tests can check
// the parallel kernels against an independent loop and the benchmark can
// report the speedup.
namespace serial {

template <class F>
void fill(std::span<double> out, F&& f) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(i);
}

template <class F>
double sum(std::size_t n, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(i);
  return s;
}

template <class F>
std::vector<double> sums(std::size_t n, std::size_t k, F&& f) {
  std::vector<double> acc(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) f(i, acc.data());
  return acc;
}

template <class F>
double max(std::size_t n, F&& f) {
  double best = -1.7976931348623157e308;
  for (std::size_t i = 0; i < n; ++i) best = std::max(best, f(i));
  return best;
}

}  // namespace serial
}  // namespace tailrisk::kernels
