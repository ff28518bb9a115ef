#include "psim/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace psim {

namespace {
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * kTwoPow53Inv; }

double Rng::normal() {
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * kTwoPow53Inv;
  const double u2 = static_cast<double>(engine_() >> 11) * kTwoPow53Inv;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
  auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }
  return order;
}

}  // namespace psim
