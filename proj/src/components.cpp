#include "occdvo/components.hpp"

namespace occdvo {

Components label_components(const Mask& set, Connectivity connectivity) {
  const int w = set.width();
  const int h = set.height();
  Components out{Grid<int>(w, h, 0), {}};
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (set(x, y) == 0 || out.labels(x, y) != 0) continue;
      const int label = out.count() + 1;
      int area = 0;
      out.labels(x, y) = label;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        for_each_neighbor(cx, cy, w, h, connectivity, [&](int nx, int ny) {
          if (set(nx, ny) != 0 && out.labels(nx, ny) == 0) {
            out.labels(nx, ny) = label;
            stack.emplace_back(nx, ny);
          }
        });
      }
      out.areas.push_back(area);
    }
  }
  return out;
}

}  // namespace occdvo
