#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace psim {

/// Deterministic random stream used everywhere randomness is needed.
///
/// The algorithm is fixed so that streams are reproducible across platforms:
///
///   engine   std::mt19937_64 seeded with the 64-bit seed (MT19937-64, whose
///            output sequence is pinned by the C++ standard)
///   uniform  u = (x >> 11) * 2^-53, in [0, 1)
///   normal   Box-Muller, one variate per two engine draws x1, x2:
///              u1 = ((x1 >> 11) + 1) * 2^-53   (in (0, 1])
///              u2 = (x2 >> 11) * 2^-53
///              z  = sqrt(-2 ln u1) * cos(2 pi u2)
///   index    floor(uniform() * n)
///
/// Sub-streams are keyed with derive_seed(), a SplitMix64 finalizer over
/// master + (index + 1) * 0x9E3779B97F4A7C15.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Fisher-Yates from the back: for i = n-1 .. 1 swap(i, index(i + 1)).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace psim
