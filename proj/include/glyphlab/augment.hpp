#pragma once

#include <cstdint>
#include <string_view>

#include "glyphlab/rng.hpp"
#include "glyphlab/tensor.hpp"

namespace glyphlab {

/// Maximal geometric distortions. Shifts and zoom are fractions; rotation is
/// in degrees; shear is an angle bound in radians.
struct AugmentPolicy {
  bool hflip = false;
  bool vflip = false;
  double rot_max = 0.0;
  double wshift_max = 0.0;
  double hshift_max = 0.0;
  double shear_max = 0.0;
  double zoom_max = 0.0;

  void validate() const;
  bool is_identity() const noexcept;
  friend bool operator==(const AugmentPolicy&, const AugmentPolicy&) = default;
};

struct AffineParams {
  double theta = 0.0;  // degrees
  double tx = 0.0;     // pixels
  double ty = 0.0;
  double shear = 0.0;  // radians
  double zx = 1.0;
  double zy = 1.0;
  bool hflip = false;
  bool vflip = false;

  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

/// "none", "lossless" (flips) or "lossy" (rotation 40, shifts/shear/zoom 0.2).
AugmentPolicy preset(std::string_view name);

AffineParams sample_affine(const AugmentPolicy& policy, Rng& rng, std::size_t w, std::size_t h);

/// Inverse-maps every destination pixel about the image center with
/// bilinear sampling and nearest-edge fill. `img` is [h, w].
Tensor apply_affine(const Tensor& img, const AffineParams& p);

/// Image i of [n, h, w] uses a stream derived from (seed, counter, i).
Tensor augment_batch(const Tensor& images, const AugmentPolicy& policy, std::uint64_t seed,
                     std::uint64_t counter = 0);

}  // namespace glyphlab
