#pragma once

#include <cstdint>

namespace tailrisk {

/// Master seed for any sampling operation. Equal seeds and equal request
/// sequences produce bit-identical draw streams.
struct Seed {
  std::uint64_t value = 0;
};

namespace rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 finalizer (Steele/Lea/Vigna): full-avalanche 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// i-th output of the SplitMix64 stream started at `seed`. Counter-based:
/// a pure function of (seed, i), so streams may be filled in any order and
/// from any number of threads without changing a single bit.
constexpr std::uint64_t stream_at(Seed seed, std::uint64_t i) {
  return mix64(seed.value + (i + 1) * kGolden);
}

/// Uniform draw in the open interval (0,1) with 53-bit resolution. Never
/// returns an exact 0 or 1, so inverse-CDF transforms stay finite.
inline double uniform01_at(Seed seed, std::uint64_t i) {
  return (static_cast<double>(stream_at(seed, i) >> 11) + 0.5) * 0x1.0p-53;
}

/// Substream seed derived from a master seed and up to three indices.
/// Distinct index tuples give unrelated streams by construction, which is how
/// per-replication substreams are kept overlap-free.
constexpr Seed derive(Seed master, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
  std::uint64_t v = master.value;
  v = mix64(v ^ mix64(a + kGolden));
  v = mix64(v ^ mix64(b + 2 * kGolden));
  v = mix64(v ^ mix64(c + 3 * kGolden));
  return Seed{v};
}

}  // namespace rng
}  // namespace tailrisk
