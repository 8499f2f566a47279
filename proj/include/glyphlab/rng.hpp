#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "glyphlab/tensor.hpp"

namespace glyphlab {

/// splitmix64 generator. The stream depends on the seed only.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double unit() noexcept;
  /// Uniform in [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one draw per call, the pair's sine half is discarded).
  double normal() noexcept;
  bool coin() noexcept { return unit() < 0.5; }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Stateless splitmix64 finalizer; used to derive independent sub-streams.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Fisher-Yates over 0..n-1.
std::vector<std::size_t> permutation(Rng& rng, std::size_t n);

/// Elements i.i.d. U(-L, L), L = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_init(Rng& rng, std::size_t fan_in, std::size_t fan_out, const Shape& shape);

}  // namespace glyphlab
