#pragma once

#include <vector>

#include "occdvo/image.hpp"

namespace occdvo {

enum class Connectivity { kFour = 4, kEight = 8 };

/// Connected components of the nonzero pixels of a mask. Labels are
/// 1..count() in raster order of each component's first pixel; 0 marks
/// pixels outside the set.
struct Components {
  Grid<int> labels;
  std::vector<int> areas;  // areas[label - 1]

  [[nodiscard]] int count() const { return static_cast<int>(areas.size()); }
};

[[nodiscard]] Components label_components(const Mask& set, Connectivity connectivity);

/// Calls fn(nx, ny) for every in-bounds neighbor of (x, y).
template <typename Fn>
void for_each_neighbor(int x, int y, int width, int height, Connectivity c, Fn&& fn) {
  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int n = c == Connectivity::kFour ? 4 : 8;
  for (int k = 0; k < n; ++k) {
    const int nx = x + kDx[k];
    const int ny = y + kDy[k];
    if (nx >= 0 && ny >= 0 && nx < width && ny < height) fn(nx, ny);
  }
}

}  // namespace occdvo
