#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cobras {

/// Counter-based 64-bit generator (SplitMix64 mixing). The i-th draw is a pure
/// function of (seed, i), so experiments replay bit-for-bit from their seeds and
/// independent streams can be split off for concurrent sampling.
///
/// No global state anywhere: every randomized routine takes a seed or an Rng.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~static_cast<result_type>(0); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Derives an independent stream keyed by (constructor seed, stream_id).
  /// Unaffected by draws made from this generator.
  Rng split(std::uint64_t stream_id) const {
    Rng mixer(seed_ ^ (0xbf58476d1ce4e5b9ull * (stream_id + 0x632be59bd9b4e019ull)));
    std::uint64_t child = mixer();
    child ^= mixer() << 1;
    return Rng(child);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on explicitly drawn uniforms.
  /// (std::normal_distribution is implementation-defined, so it is avoided.)
  double normal() {
    double u1 = (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, bound), unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t bound) {
    const std::uint64_t threshold = (-bound) % bound;
    for (;;) {
      std::uint64_t r = (*this)();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform integer in [lo, hi], inclusive.
  long uniform_range(long lo, long hi) {
    return lo + static_cast<long>(uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace cobras
