#include "occdvo/image.hpp"

#include <algorithm>
#include <cmath>

namespace occdvo {

std::size_t DepthImage::valid_count() const {
  return static_cast<std::size_t>(std::count_if(data().begin(), data().end(), [](double z) { return z > 0.0; }));
}

void DepthImage::validate() const {
  for (double z : data()) {
    if (!std::isfinite(z) || z < 0.0) throw ConfigError("depth values must be finite and non-negative");
  }
}

void IntensityImage::validate() const {
  for (double v : data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("intensity values must lie in [0, 1]");
  }
}

IntensityImage to_gray(const RgbImage& rgb, const std::array<double, 3>& weights) {
  IntensityImage out(rgb.width(), rgb.height());
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    const auto& c = rgb[i];
    const double g = weights[0] * c[0] + weights[1] * c[1] + weights[2] * c[2];
    out[i] = std::clamp(g, 0.0, 1.0);
  }
  return out;
}

namespace {

// Reduces each (up to) 2x2 block with `reduce(values, count)`.
template <typename Out, typename In, typename Reduce>
Out reduce_blocks(const In& in, Reduce reduce) {
  const int w = (in.width() + 1) / 2;
  const int h = (in.height() + 1) / 2;
  Out out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::array<typename std::decay_t<decltype(in[0])>, 4> vals{};
      int n = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int sx = 2 * x + dx;
          const int sy = 2 * y + dy;
          if (sx < in.width() && sy < in.height()) vals[n++] = in(sx, sy);
        }
      }
      out(x, y) = reduce(vals, n);
    }
  }
  return out;
}

}  // namespace

IntensityImage downsample(const IntensityImage& img) {
  return reduce_blocks<IntensityImage>(img, [](const auto& v, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[i];
    return s / n;
  });
}

DepthImage downsample(const DepthImage& img) {
  return reduce_blocks<DepthImage>(img, [](const auto& v, int n) {
    double s = 0.0;
    int valid = 0;
    for (int i = 0; i < n; ++i) {
      if (v[i] > 0.0) {
        s += v[i];
        ++valid;
      }
    }
    return valid > 0 ? s / valid : DepthImage::kInvalid;
  });
}

Mask downsample_mask(const Mask& background) {
  return reduce_blocks<Mask>(background, [](const auto& v, int n) {
    for (int i = 0; i < n; ++i) {
      if (v[i] == 0) return std::uint8_t{0};
    }
    return std::uint8_t{1};
  });
}

RgbdFrame downsample(const RgbdFrame& level) {
  if (level.intensity.width() < 2 || level.intensity.height() < 2) {
    throw ConfigError("cannot downsample an image smaller than 2x2");
  }
  return {downsample(level.intensity), downsample(level.depth)};
}

namespace {

struct Cell {
  int x0, y0;
  double fx, fy;
};

// Interpolation cell for p; the last row/column reuse the previous cell so
// that p = (w-1, h-1) is still representable.
std::optional<Cell> locate(int width, int height, const Pixel& p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !inside(p, width, height)) return std::nullopt;
  int x0 = static_cast<int>(std::floor(p.x));
  int y0 = static_cast<int>(std::floor(p.y));
  x0 = std::min(x0, std::max(width - 2, 0));
  y0 = std::min(y0, std::max(height - 2, 0));
  return Cell{x0, y0, p.x - x0, p.y - y0};
}

}  // namespace

std::optional<BilinearSample> sample_bilinear_grad(const Grid<double>& img, const Pixel& p, bool depth_semantics) {
  const auto cell = locate(img.width(), img.height(), p);
  if (!cell) return std::nullopt;
  const int x1 = std::min(cell->x0 + 1, img.width() - 1);
  const int y1 = std::min(cell->y0 + 1, img.height() - 1);
  const double v00 = img(cell->x0, cell->y0);
  const double v10 = img(x1, cell->y0);
  const double v01 = img(cell->x0, y1);
  const double v11 = img(x1, y1);
  if (depth_semantics && !(v00 > 0.0 && v10 > 0.0 && v01 > 0.0 && v11 > 0.0)) return std::nullopt;
  const double fx = cell->fx;
  const double fy = cell->fy;
  // Convex-combination form keeps stored values exact at integer positions.
  const double top = (1.0 - fx) * v00 + fx * v10;
  const double bottom = (1.0 - fx) * v01 + fx * v11;
  BilinearSample s;
  s.value = (1.0 - fy) * top + fy * bottom;
  s.dx = (1.0 - fy) * (v10 - v00) + fy * (v11 - v01);
  s.dy = bottom - top;
  return s;
}

std::optional<double> sample_bilinear(const Grid<double>& img, const Pixel& p) {
  const auto s = sample_bilinear_grad(img, p, false);
  if (!s) return std::nullopt;
  return s->value;
}

std::optional<double> sample_bilinear(const DepthImage& img, const Pixel& p) {
  const auto s = sample_bilinear_grad(img, p, true);
  if (!s) return std::nullopt;
  return s->value;
}

Pyramid build_pyramid(const RgbdFrame& frame, const CameraIntrinsics& K, int levels) {
  if (levels < 1) throw ConfigError("pyramid needs at least one level");
  if (frame.intensity.width() != K.width || frame.intensity.height() != K.height ||
      !frame.intensity.same_shape(frame.depth)) {
    throw ConfigError("frame dimensions do not match intrinsics");
  }
  Pyramid p;
  p.levels.reserve(levels);
  p.intrinsics.reserve(levels);
  p.levels.push_back(frame);
  p.intrinsics.push_back(K);
  for (int l = 1; l < levels; ++l) {
    p.levels.push_back(downsample(p.levels.back()));
    p.intrinsics.push_back(p.intrinsics.back().half());
  }
  return p;
}

}  // namespace occdvo
