#pragma once

#include <cstdint>

#include "larope/matrix.hpp"

namespace larope {

/// SplitMix64 counter generator (Steele, Lea & Flood 2014).
///
/// The state advances by the 64-bit golden-ratio increment and each output is
/// a fixed bijective mix of the counter, so a seed determines the stream
/// bit-for-bit on every platform. All derived distributions below are written
/// out explicitly rather than taken from <random>, whose distributions are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive, unbiased (rejection sampling).
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept;

  /// Standard normal via Box-Muller; one sample per call, no caching.
  double normal() noexcept;

  Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) noexcept;
  Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace larope
