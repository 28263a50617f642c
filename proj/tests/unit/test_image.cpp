#include <doctest.h>

#include <random>

#include "occdvo/components.hpp"
#include "occdvo/image.hpp"

using namespace occdvo;

TEST_CASE("gray conversion") {
  RgbImage rgb(3, 1);
  rgb(0, 0) = {1, 1, 1};
  rgb(1, 0) = {0, 0, 0};
  rgb(2, 0) = {1, 0, 0};
  const IntensityImage g = to_gray(rgb);
  CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g(1, 0) == 0.0);
  CHECK(g(2, 0) == doctest::Approx(0.299));
}

TEST_CASE("downsampling a constant intensity image") {
  const IntensityImage img(8, 6, 0.4);
  const IntensityImage half = downsample(img);
  CHECK(half.width() == 4);
  CHECK(half.height() == 3);
  for (double v : half.data()) CHECK(v == doctest::Approx(0.4));
}

TEST_CASE("downsampling odd sizes rounds up") {
  const IntensityImage half = downsample(IntensityImage(7, 5, 0.2));
  CHECK(half.width() == 4);
  CHECK(half.height() == 3);
}

TEST_CASE("depth downsampling averages valid entries only") {
  DepthImage d(2, 2, 1.0);
  d(0, 1) = DepthImage::kInvalid;
  CHECK(downsample(d)(0, 0) == 1.0);
  DepthImage e(2, 2, 1.0);
  e(0, 0) = 3.0;
  e(1, 1) = DepthImage::kInvalid;
  CHECK(downsample(e)(0, 0) == doctest::Approx(5.0 / 3.0));
  CHECK(downsample(DepthImage(2, 2, 0.0))(0, 0) == DepthImage::kInvalid);
}

TEST_CASE("mask downsampling keeps any object pixel") {
  Mask b(4, 2, 1);
  b(3, 1) = 0;
  const Mask h = downsample_mask(b);
  CHECK(h(0, 0) == 1);
  CHECK(h(1, 0) == 0);
}

TEST_CASE("bilinear sampling") {
  Grid<double> g(3, 2);
  g(0, 0) = 1.0;
  g(1, 0) = 3.0;
  g(2, 0) = 5.0;
  g(0, 1) = 1.0;
  g(1, 1) = 3.0;
  g(2, 1) = 5.0;
  CHECK(*sample_bilinear(g, {1, 0}) == 3.0);
  CHECK(*sample_bilinear(g, {0.5, 0}) == doctest::Approx(2.0));
  CHECK(*sample_bilinear(g, {0.5, 0.7}) == doctest::Approx(2.0));
  CHECK(*sample_bilinear(g, {2, 1}) == 5.0);
  CHECK_FALSE(sample_bilinear(g, {-0.1, 0}).has_value());
  CHECK_FALSE(sample_bilinear(g, {2.01, 0}).has_value());
  CHECK_FALSE(sample_bilinear(g, {0, 1.5}).has_value());
}

TEST_CASE("bilinear depth sampling needs four valid neighbors") {
  DepthImage d(3, 3, 2.0);
  d(1, 1) = DepthImage::kInvalid;
  CHECK_FALSE(sample_bilinear(d, {0.5, 0.5}).has_value());
  // Conservative even where the invalid neighbor has zero weight.
  CHECK_FALSE(sample_bilinear(d, {0, 0}).has_value());
  DepthImage e(4, 4, 2.0);
  e(0, 0) = DepthImage::kInvalid;
  CHECK(*sample_bilinear(e, {2, 2}) == 2.0);
  CHECK(*sample_bilinear(e, {1.5, 2.5}) == 2.0);
}

TEST_CASE("bilinear gradient matches finite differences inside a cell") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  Grid<double> g(6, 5);
  for (auto& v : g.data()) v = u(rng);
  for (int i = 0; i < 200; ++i) {
    const Pixel p{0.05 + 4.9 * u(rng), 0.05 + 3.9 * u(rng)};
    const double fx = p.x - std::floor(p.x), fy = p.y - std::floor(p.y);
    if (fx < 1e-3 || fx > 1 - 1e-3 || fy < 1e-3 || fy > 1 - 1e-3) continue;
    const auto s = sample_bilinear_grad(g, p, false);
    REQUIRE(s.has_value());
    const double h = 1e-7;
    const double dx = (*sample_bilinear(g, {p.x + h, p.y}) - *sample_bilinear(g, {p.x - h, p.y})) / (2 * h);
    const double dy = (*sample_bilinear(g, {p.x, p.y + h}) - *sample_bilinear(g, {p.x, p.y - h})) / (2 * h);
    CHECK(s->dx == doctest::Approx(dx).epsilon(1e-6));
    CHECK(s->dy == doctest::Approx(dy).epsilon(1e-6));
  }
}

TEST_CASE("pyramid dimensions and intrinsics") {
  const CameraIntrinsics K = CameraIntrinsics::kinect_scaled(64, 48);
  const RgbdFrame f{IntensityImage(64, 48, 0.5), DepthImage(64, 48, 1.0)};
  const Pyramid p = build_pyramid(f, K, 3);
  REQUIRE(p.size() == 3);
  CHECK(p.levels[2].depth.width() == 16);
  CHECK(p.intrinsics[1].fx == doctest::Approx(K.fx / 2));
  CHECK(p.intrinsics[1].cx == doctest::Approx((K.cx + 0.5) / 2 - 0.5));
  CHECK_THROWS_AS((void)build_pyramid(f, K, 0), ConfigError);
}

TEST_CASE("image validation") {
  DepthImage d(2, 2, 1.0);
  d(1, 1) = -1.0;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  IntensityImage i(2, 2, 0.5);
  i(0, 0) = 1.5;
  CHECK_THROWS_AS(i.validate(), ConfigError);
  CHECK_THROWS_AS(Grid<int>(2, 2, std::vector<int>(3)), ConfigError);
}

TEST_CASE("connected components") {
  Mask m(5, 3, 0);
  m(0, 0) = m(1, 0) = 1;
  m(2, 1) = 1;
  m(3, 2) = m(4, 2) = 1;
  const Components four = label_components(m, Connectivity::kFour);
  CHECK(four.count() == 3);
  CHECK(four.labels(0, 0) == 1);
  CHECK(four.labels(2, 1) == 2);
  CHECK(four.areas[2] == 2);
  const Components eight = label_components(m, Connectivity::kEight);
  CHECK(eight.count() == 1);
  CHECK(eight.areas[0] == 5);
}
