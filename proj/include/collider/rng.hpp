#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace collider {

// mt19937_64 output is fully specified by the standard; the distributions in
// <random> are not, so the helpers below do their own conversions to keep
// seeded results identical across standard libraries.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for replicate `stream` under a base seed.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x5851f42d4c957f2dULL));
}

/// SplitMix64 sequence as a 64-bit engine. Seeding is a single store, which
/// matters when every Monte Carlo chain gets its own stream.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    const std::uint64_t out = splitmix64(state_);
    state_ += 0x9e3779b97f4a7c15ULL;
    return out;
  }

 private:
  std::uint64_t state_;
};

/// Uniform draw in [0, 1) with 53 random bits.
template <class Engine>
double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Modulo bias is below 2^-60 for the small n used here.
template <class Engine>
std::uint64_t uniform_index(Engine& rng, std::uint64_t n) {
  return rng() % n;
}

template <class Engine>
double standard_normal(Engine& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace collider
