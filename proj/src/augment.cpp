#include "glyphlab/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "glyphlab/error.hpp"

namespace glyphlab {

void AugmentPolicy::validate() const {
  require(rot_max >= 0 && wshift_max >= 0 && hshift_max >= 0 && shear_max >= 0 && zoom_max >= 0,
          ErrorCode::Argument, "augmentation maxima must be >= 0");
  require(rot_max <= 180, ErrorCode::Argument, "rotation bound must be <= 180 degrees");
  require(zoom_max < 1, ErrorCode::Argument, "zoom bound must be < 1");
}

bool AugmentPolicy::is_identity() const noexcept {
  return !hflip && !vflip && rot_max == 0 && wshift_max == 0 && hshift_max == 0 && shear_max == 0 &&
         zoom_max == 0;
}

AugmentPolicy preset(std::string_view name) {
  AugmentPolicy p;
  if (name == "none") return p;
  if (name == "lossless") {
    p.hflip = p.vflip = true;
    return p;
  }
  if (name == "lossy") {
    p.rot_max = 40.0;
    p.wshift_max = p.hshift_max = p.shear_max = p.zoom_max = 0.2;
    return p;
  }
  fail(ErrorCode::Argument, "unknown augmentation policy '" + std::string(name) + "'");
}

AffineParams sample_affine(const AugmentPolicy& policy, Rng& rng, std::size_t w, std::size_t h) {
  policy.validate();
  require(w >= 1 && h >= 1, ErrorCode::Argument, "sample_affine: empty image");
  // Draw order is fixed so streams stay comparable across policies.
  AffineParams p;
  p.theta = rng.uniform(-policy.rot_max, policy.rot_max);
  const double wx = policy.wshift_max * static_cast<double>(w);
  const double hy = policy.hshift_max * static_cast<double>(h);
  p.tx = rng.uniform(-wx, wx);
  p.ty = rng.uniform(-hy, hy);
  p.shear = rng.uniform(-policy.shear_max, policy.shear_max);
  p.zx = rng.uniform(1.0 - policy.zoom_max, 1.0 + policy.zoom_max);
  p.zy = rng.uniform(1.0 - policy.zoom_max, 1.0 + policy.zoom_max);
  const bool hf = rng.coin();
  const bool vf = rng.coin();
  p.hflip = policy.hflip && hf;
  p.vflip = policy.vflip && vf;
  return p;
}

Tensor apply_affine(const Tensor& img, const AffineParams& p) {
  require(img.rank() == 2, ErrorCode::Dimension, "apply_affine expects [h, w]");
  require(p.zx > 0 && p.zy > 0, ErrorCode::Argument, "zoom factors must be positive");
  const std::size_t h = img.extent(0), w = img.extent(1);
  Tensor out({h, w});
  if (h == 0 || w == 0) return out;

  // M = Rot(theta) * Shear * Scale, with x-shear [[1, -tan s], [0, 1]].
  const double t = p.theta * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  const double k = -std::tan(p.shear);
  const double m00 = c * p.zx, m01 = (c * k - s) * p.zy;
  const double m10 = s * p.zx, m11 = (s * k + c) * p.zy;
  const double det = m00 * m11 - m01 * m10;
  require(std::isfinite(det) && det != 0.0, ErrorCode::Argument, "singular affine transform");
  const double i00 = m11 / det, i01 = -m01 / det;
  const double i10 = -m10 / det, i11 = m00 / det;

  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double max_x = static_cast<double>(w - 1), max_y = static_cast<double>(h - 1);
  const double* src = img.data().data();
  double* dst = out.data().data();

  for (std::size_t row = 0; row < h; ++row) {
    for (std::size_t col = 0; col < w; ++col) {
      // Undo flips, then translation, then the linear part about the center.
      double x = p.hflip ? max_x - static_cast<double>(col) : static_cast<double>(col);
      double y = p.vflip ? max_y - static_cast<double>(row) : static_cast<double>(row);
      const double dx = x - p.tx - cx;
      const double dy = y - p.ty - cy;
      x = std::clamp(cx + i00 * dx + i01 * dy, 0.0, max_x);
      y = std::clamp(cy + i10 * dx + i11 * dy, 0.0, max_y);
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const auto y0 = static_cast<std::size_t>(std::floor(y));
      const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double fx = x - static_cast<double>(x0), fy = y - static_cast<double>(y0);
      const double a = src[y0 * w + x0], b = src[y0 * w + x1];
      const double cc = src[y1 * w + x0], d = src[y1 * w + x1];
      const double top = a + fx * (b - a);
      const double bottom = cc + fx * (d - cc);
      dst[row * w + col] = std::clamp(top + fy * (bottom - top), 0.0, 1.0);
    }
  }
  return out;
}

Tensor augment_batch(const Tensor& images, const AugmentPolicy& policy, std::uint64_t seed, std::uint64_t counter) {
  require(images.rank() == 3, ErrorCode::Dimension, "augment_batch expects [n, h, w]");
  policy.validate();
  if (policy.is_identity()) return images;
  const std::size_t n = images.extent(0), h = images.extent(1), w = images.extent(2);
  Tensor out(images.shape());
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, counter, i));
    const AffineParams params = sample_affine(policy, rng, w, h);
    const auto in_slab = images.slab(i);
    const Tensor one({h, w}, std::vector<double>(in_slab.begin(), in_slab.end()));
    const Tensor moved = apply_affine(one, params);
    std::copy(moved.values().begin(), moved.values().end(), out.slab(i).begin());
  }
  return out;
}

}  // namespace glyphlab
