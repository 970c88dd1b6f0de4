#pragma once

#include <cstdint>
#include <random>

namespace dpdlasso {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Sub-seed for stream `index` under `seed`: mix64(mix64(seed) ^ index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ index);
}

/// Named sub-streams used by the harness so that adding a stream never
/// shifts the others.
enum class Stream : std::uint64_t {
  truth = 1,
  design = 2,
  noise = 3,
  contamination = 4,
  test_design = 5,
  test_noise = 6,
  cv = 7,
  outliers = 8,
  init = 9,
};

inline std::uint64_t derive_seed(std::uint64_t seed, Stream s) {
  return derive_seed(seed, static_cast<std::uint64_t>(s) << 32);
}

}  // namespace dpdlasso
