#pragma once

#include <cstddef>
#include <cstdint>

#include "glyphlab/dataset.hpp"

namespace glyphlab {

/// Filled circles vs filled squares of equal area at random positions and
/// scales, with additive Gaussian noise. Classes: "circle" (0), "square" (1).
struct ShapesConfig {
  std::size_t per_class = 200;
  std::size_t side = 32;
  double noise = 0.25;
  double min_radius = 0.18;  // fraction of side
  double max_radius = 0.30;
  std::uint64_t seed = 0;
};

LabeledDataset make_shapes(const ShapesConfig& cfg);

}  // namespace glyphlab
