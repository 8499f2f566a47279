#pragma once

#include <cstddef>

namespace glyphlab {

inline double fraction(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace glyphlab
