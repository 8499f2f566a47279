#include "glyphlab/rng.hpp"

#include <cmath>
#include <numbers>

#include "glyphlab/error.hpp"

namespace glyphlab {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next() noexcept {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double Rng::unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  require(lo <= hi, ErrorCode::Argument, "uniform: lo > hi");
  const double u = unit();
  if (lo == hi) return lo;
  double v = lo + (hi - lo) * u;
  if (v >= hi) v = std::nextafter(hi, lo);
  return v;
}

std::uint64_t Rng::below(std::uint64_t n) {
  require(n > 0, ErrorCode::Argument, "below: empty range");
  // Rejection keeps the draw unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal() noexcept {
  const double u1 = 1.0 - unit();  // (0, 1]
  const double u2 = unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (a + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (b + 0x85157af5ULL));
  return h;
}

std::vector<std::size_t> permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

Tensor glorot_init(Rng& rng, std::size_t fan_in, std::size_t fan_out, const Shape& shape) {
  require(fan_in >= 1 && fan_out >= 1, ErrorCode::Argument, "glorot_init: fans must be >= 1");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

}  // namespace glyphlab
