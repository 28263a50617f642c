#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "occdvo/errors.hpp"
#include "occdvo/geometry.hpp"

namespace occdvo {

/// Dense row-major 2-D buffer.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}
  Grid(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height)) {
      throw ConfigError("grid data size does not match dimensions");
    }
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] T& operator()(int x, int y) { return data_[index(x, y)]; }
  [[nodiscard]] const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  [[nodiscard]] T& operator[](std::size_t i) { return data_[i]; }
  [[nodiscard]] const T& operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::span<T> data() { return data_; }
  [[nodiscard]] std::span<const T> data() const { return data_; }
  [[nodiscard]] const std::vector<T>& values() const { return data_; }

  [[nodiscard]] bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  template <typename U>
  [[nodiscard]] bool same_shape(const Grid<U>& o) const {
    return width_ == o.width() && height_ == o.height();
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Grid&) const = default;

 private:
  static std::size_t checked_size(int w, int h) {
    if (w < 0 || h < 0) throw ConfigError("negative grid dimensions");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Binary per-pixel flags (0 / 1).
using Mask = Grid<std::uint8_t>;

/// Depth in meters; exactly 0 marks an unmeasured pixel.
class DepthImage : public Grid<double> {
 public:
  using Grid<double>::Grid;
  DepthImage() = default;
  explicit DepthImage(Grid<double> g) : Grid<double>(std::move(g)) {}

  static constexpr double kInvalid = 0.0;

  [[nodiscard]] bool valid(int x, int y) const { return (*this)(x, y) > 0.0; }
  [[nodiscard]] std::size_t valid_count() const;

  /// Throws ConfigError if any value is negative or non-finite.
  void validate() const;
};

/// Gray values in [0, 1].
class IntensityImage : public Grid<double> {
 public:
  using Grid<double>::Grid;
  IntensityImage() = default;
  explicit IntensityImage(Grid<double> g) : Grid<double>(std::move(g)) {}

  /// Throws ConfigError if any value falls outside [0, 1].
  void validate() const;
};

/// Interleaved 3-channel color image with channel values in [0, 1].
using RgbImage = Grid<std::array<double, 3>>;

inline constexpr std::array<double, 3> kLumaWeights{0.299, 0.587, 0.114};

[[nodiscard]] IntensityImage to_gray(const RgbImage& rgb,
                                     const std::array<double, 3>& weights = kLumaWeights);

struct RgbdFrame {
  IntensityImage intensity;
  DepthImage depth;
};

/// 2x2 block reduction to ceil(w/2) x ceil(h/2). Intensity is the block mean;
/// depth is the mean of the valid block entries, invalid if none.
[[nodiscard]] RgbdFrame downsample(const RgbdFrame& level);
[[nodiscard]] IntensityImage downsample(const IntensityImage& img);
[[nodiscard]] DepthImage downsample(const DepthImage& img);
/// A block is 0 (object) if any of its entries is 0.
[[nodiscard]] Mask downsample_mask(const Mask& background);

/// Bilinear interpolation of a plain grid; nullopt outside the image.
[[nodiscard]] std::optional<double> sample_bilinear(const Grid<double>& img, const Pixel& p);
/// Bilinear depth interpolation; nullopt outside the image or when any of the
/// four neighbors is invalid.
[[nodiscard]] std::optional<double> sample_bilinear(const DepthImage& img, const Pixel& p);

/// Bilinear sample together with its exact spatial derivative (d/dx, d/dy)
/// inside the interpolation cell.
struct BilinearSample {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};
[[nodiscard]] std::optional<BilinearSample> sample_bilinear_grad(const Grid<double>& img, const Pixel& p,
                                                                 bool depth_semantics);

struct Pyramid {
  std::vector<RgbdFrame> levels;
  std::vector<CameraIntrinsics> intrinsics;

  [[nodiscard]] int size() const { return static_cast<int>(levels.size()); }
};

/// Level 0 is the input; level L has dimensions ceil(dim / 2^L).
[[nodiscard]] Pyramid build_pyramid(const RgbdFrame& frame, const CameraIntrinsics& K, int levels);

}  // namespace occdvo
