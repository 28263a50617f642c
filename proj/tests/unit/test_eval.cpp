#include <doctest.h>

#include <cmath>

#include <Eigen/Geometry>

#include "occdvo/eval.hpp"

using namespace occdvo;

namespace {

Mask strip(int x0, int x1) {
  Mask m(10, 4, 0);
  for (int y = 0; y < 4; ++y)
    for (int x = x0; x < x1; ++x) m(x, y) = 1;
  return m;
}

}  // namespace

TEST_CASE("perfect prediction") {
  const FrameScore s = f1_frame(strip(2, 5), strip(2, 5));
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);
  CHECK(s.f1 == 1.0);
  CHECK(s.tp == 12);
}

TEST_CASE("empty prediction against objects") {
  const FrameScore s = f1_frame(Mask(10, 4, 0), strip(2, 5));
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
  CHECK(s.fn == 12);
  CHECK(s.scored);
}

TEST_CASE("prediction with an equal false region") {
  // gt: columns 2-4; prediction adds columns 5-7.
  const FrameScore s = f1_frame(strip(2, 8), strip(2, 5));
  CHECK(s.tp == 12);
  CHECK(s.fp == 12);
  CHECK(s.fn == 0);
  CHECK(s.precision == 0.5);
  CHECK(s.recall == 1.0);
  CHECK(s.f1 == 2.0 / 3.0);
  // Swapping roles swaps precision and recall, not F1.
  const FrameScore t = f1_frame(strip(2, 5), strip(2, 8));
  CHECK(t.precision == 1.0);
  CHECK(t.recall == 0.5);
  CHECK(t.f1 == 2.0 / 3.0);
}

TEST_CASE("empty masks") {
  const FrameScore both = f1_frame(Mask(10, 4, 0), Mask(10, 4, 0));
  CHECK_FALSE(both.scored);
  CHECK(both.f1 == 1.0);
  const FrameScore spurious = f1_frame(strip(0, 1), Mask(10, 4, 0));
  CHECK(spurious.scored);
  CHECK(spurious.f1 == 0.0);
  CHECK(spurious.precision == 0.0);
  CHECK_THROWS_AS((void)f1_frame(Mask(3, 3, 0), Mask(4, 3, 0)), ConfigError);
}

TEST_CASE("sequence mean") {
  FrameScore a, b, skip;
  a.f1 = 1.0;
  b.f1 = 0.5;
  skip.f1 = 1.0;
  skip.scored = false;
  const SegmentationScore s = f1_sequence({a, b, skip});
  CHECK(s.mean_f1 == 0.75);
  CHECK(s.scored_frames == 2);
  CHECK(f1_sequence({a, a, a}).mean_f1 == 1.0);
  CHECK(std::isnan(f1_sequence({skip}).mean_f1));
  CHECK_THROWS_AS((void)f1_sequence(std::vector<FrameScore>{}), ConfigError);
  const SegmentationScore m = f1_sequence({strip(2, 5), strip(2, 8)}, {strip(2, 5), strip(2, 5)});
  CHECK(m.mean_f1 == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("rpe of identical trajectories") {
  std::vector<RigidTransform> P;
  for (int i = 0; i < 10; ++i) {
    P.push_back({Eigen::AngleAxisd(0.1 * i, Eigen::Vector3d::UnitY()).toRotationMatrix(), Eigen::Vector3d(i, 0, 1)});
  }
  const RpeScore r = rpe(P, P, 3);
  CHECK(r.translation_rmse < 1e-12);
  CHECK(r.rotation_rmse_deg < 1e-6);
  CHECK(r.pairs.size() == 7);
}

TEST_CASE("rpe ignores a global offset") {
  std::vector<RigidTransform> Q, P;
  const RigidTransform G(Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 1, 0).normalized()).toRotationMatrix(),
                         Eigen::Vector3d(3, -2, 5));
  for (int i = 0; i < 20; ++i) {
    Q.push_back({Eigen::AngleAxisd(0.05 * i, Eigen::Vector3d::UnitZ()).toRotationMatrix(),
                 Eigen::Vector3d(0.1 * i, 0.02 * i * i, 0)});
    P.push_back(G * Q.back());
  }
  const RpeScore r = rpe(P, Q, 5);
  CHECK(r.translation_rmse < 1e-12);
  CHECK(r.rotation_rmse_deg < 1e-6);
}

TEST_CASE("rpe of a drifting estimate") {
  std::vector<RigidTransform> Q(200), P;
  for (int i = 0; i < 200; ++i) P.push_back(RigidTransform::translation({0.001 * i, 0, 0}));
  const RpeScore r = rpe(P, Q, 150);
  CHECK(std::abs(r.translation_rmse - 0.001 * 150) <= 1e-12);
  CHECK(r.rotation_rmse_deg == 0.0);
  CHECK(r.pairs.size() == 50);
}

TEST_CASE("rpe edge cases") {
  std::vector<RigidTransform> P(5);
  CHECK(rpe(P, P, 0).translation_rmse == 0.0);
  CHECK_THROWS_WITH_AS((void)rpe(P, P, 5), doctest::Contains("insufficient trajectory length"), DataError);
  CHECK_THROWS_AS((void)rpe(P, std::vector<RigidTransform>(4), 1), ConfigError);
}

TEST_CASE("rpe on timestamped trajectories associates first") {
  Trajectory est, gt;
  for (int i = 0; i < 40; ++i) {
    gt.poses.push_back({i / 30.0, RigidTransform::identity()});
    if (i % 2 == 0) est.poses.push_back({i / 30.0 + 0.001, RigidTransform::translation({0.01 * i, 0, 0})});
  }
  const RpeScore r = rpe(est, gt, 10);
  CHECK(r.pairs.size() == 10);
  CHECK(r.translation_rmse == doctest::Approx(0.2));
}
