#include "glyphlab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "glyphlab/error.hpp"
#include "glyphlab/rng.hpp"

namespace glyphlab {

LabeledDataset make_shapes(const ShapesConfig& cfg) {
  require(cfg.side >= 4, ErrorCode::Argument, "shapes need side >= 4");
  require(cfg.per_class >= 1, ErrorCode::Argument, "shapes need per_class >= 1");
  require(cfg.min_radius > 0 && cfg.min_radius <= cfg.max_radius && cfg.max_radius < 0.5, ErrorCode::Argument,
          "shape radii must satisfy 0 < min <= max < 0.5");
  require(cfg.noise >= 0, ErrorCode::Argument, "noise must be >= 0");
  const std::size_t side = cfg.side, n = 2 * cfg.per_class;
  const double s = static_cast<double>(side);
  constexpr int kSuper = 4;  // 4x4 supersampling for edge coverage

  Rng rng(cfg.seed);
  LabeledDataset ds;
  ds.class_names = {"circle", "square"};
  std::vector<double> pixels(n * side * side);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t label = i < cfg.per_class ? 0 : 1;
    ds.labels.push_back(label);
    const double r = rng.uniform(cfg.min_radius, cfg.max_radius) * s;
    const double half = r * std::sqrt(std::numbers::pi) / 2.0;  // square of the circle's area
    const double extent = label == 0 ? r : half;
    const double cx = rng.uniform(extent, s - extent);
    const double cy = rng.uniform(extent, s - extent);
    const double ink = rng.uniform(0.7, 1.0);
    double* img = pixels.data() + i * side * side;
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        int hits = 0;
        for (int sy = 0; sy < kSuper; ++sy) {
          for (int sx = 0; sx < kSuper; ++sx) {
            const double px = static_cast<double>(x) + (sx + 0.5) / kSuper - cx;
            const double py = static_cast<double>(y) + (sy + 0.5) / kSuper - cy;
            const bool inside = label == 0 ? px * px + py * py <= r * r
                                           : std::abs(px) <= half && std::abs(py) <= half;
            hits += inside;
          }
        }
        const double v = ink * hits / double(kSuper * kSuper) + cfg.noise * rng.normal();
        // Quantized to the 8-bit grid so GLY1 round trips are exact.
        img[y * side + x] = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5) / 255.0;
      }
    }
  }
  ds.images = Tensor({n, side, side}, std::move(pixels));
  return ds;
}

}  // namespace glyphlab
