#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace besovreg::rng {

// SplitMix64 finalizer. Used as a stateless mixing function so that any
// (seed, counter) pair maps to an independent-looking 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based word: depends only on (seed, counter).
constexpr std::uint64_t hash(std::uint64_t seed, std::uint64_t counter) noexcept {
  return mix64(mix64(seed) + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

// Derived stream seed for a (setting, trial) pair of an experiment.
//   derive_seed(base, a, b) = hash(hash(base, a), b)
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return hash(hash(base, a), b);
}

// Uniform double in (0, 1]; 53 random bits.
inline double unit_open_closed(std::uint64_t word) noexcept {
  return static_cast<double>((word >> 11) + 1) * 0x1.0p-53;
}

// Standard normal deviate for slot `index` of the stream `seed`.
// Box-Muller on two counter-derived uniforms; the value for a given index
// does not depend on the evaluation order of other indices.
inline double normal_at(std::uint64_t seed, std::uint64_t index) noexcept {
  const double u1 = unit_open_closed(hash(seed, 2 * index));
  const double u2 = unit_open_closed(hash(seed, 2 * index + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Uniform deviate in (-1, 1] for slot `index`.
inline double symmetric_uniform_at(std::uint64_t seed, std::uint64_t index) noexcept {
  return 2.0 * unit_open_closed(hash(seed, 2 * index)) - 1.0;
}

// Random sign for slot `index`.
inline double sign_at(std::uint64_t seed, std::uint64_t index) noexcept {
  return (hash(seed, 2 * index) >> 63) ? 1.0 : -1.0;
}

// Small, fast sequential generator (xoshiro256**) for Monte Carlo loops
// where the per-trial stream is seeded through derive_seed.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept {
    for (int i = 0; i < 4; ++i) state_[i] = hash(seed, static_cast<std::uint64_t>(i));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Pair of independent standard normals (Box-Muller).
  void normal_pair(double& a, double& b) noexcept {
    const double u1 = unit_open_closed((*this)());
    const double u2 = unit_open_closed((*this)());
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    a = radius * std::cos(angle);
    b = radius * std::sin(angle);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace besovreg::rng
