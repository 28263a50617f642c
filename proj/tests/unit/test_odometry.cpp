#include <doctest.h>

#include <random>

#include "occdvo/odometry.hpp"
#include "occdvo/synth.hpp"
#include "../support/oracles.hpp"

using namespace occdvo;

TEST_CASE("bi-square cost") {
  const double k = 0.3;
  CHECK(bisquare_rho(0.0, k) == 0.0);
  CHECK(bisquare_rho(k, k) == doctest::Approx(k * k / 6.0).epsilon(1e-15));
  for (double e : {0.30001, 0.5, -2.0, 1e6}) CHECK(bisquare_rho(e, k) == k * k / 6.0);
  CHECK(bisquare_rho(-0.1, k) == bisquare_rho(0.1, k));
}

TEST_CASE("bi-square weight") {
  const double k = 2.0;
  CHECK(bisquare_weight(0.0, k) == 1.0);
  CHECK(bisquare_weight(2.5, k) == 0.0);
  CHECK(bisquare_weight(-2.5, k) == 0.0);
  CHECK(bisquare_weight(1.0, k) == doctest::Approx(0.5625));
  for (double e = -3.0; e <= 3.0; e += 0.01) {
    const double w = bisquare_weight(e, k);
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
  }
}

TEST_CASE("bi-square derivative matches finite differences") {
  const double k = 0.7;
  const double h = 1e-6;
  for (double e = -0.69; e <= 0.69; e += 0.023) {
    const double fd = (bisquare_rho(e + h, k) - bisquare_rho(e - h, k)) / (2 * h);
    const double an = bisquare_derivative(e, k);
    CHECK(std::abs(an - fd) <= 1e-6 * std::max(1e-3, std::abs(fd)));
    CHECK(an == doctest::Approx(e * bisquare_weight(e, k)));
  }
  CHECK(bisquare_derivative(1.0, k) == 0.0);
}

namespace {

struct Pair {
  CameraIntrinsics K;
  RgbdFrame prev, cur;
  Twist truth;
};

Pair textured_pair(int w, int h, const Twist& motion, double cell = 0.0) {
  SceneSpec s = make_suite("static_box", w, h);
  s.objects.resize(1);
  if (cell > 0.0) s.objects[0].texture.cell = cell;
  s.frames = 2;
  s.camera = {RigidTransform::identity(), exp_se3(motion)};
  s.eval_start = 0;
  const SynthFrame a = render_frame(s, 0);
  const SynthFrame b = render_frame(s, 1);
  return {s.intrinsics, a.rgbd(), b.rgbd(), log_se3(a.pose.inverse() * b.pose)};
}

}  // namespace

TEST_CASE("identical frames have zero residuals") {
  const Pair p = textured_pair(64, 48, Twist());
  const ResidualReport r = residuals(p.prev, p.prev, Twist(), {}, p.K, {});
  CHECK(r.cost == 0.0);
  CHECK(r.count == 64 * 48);
  for (double v : r.photometric.data()) CHECK(v == 0.0);
}

TEST_CASE("an all-object background map is degenerate") {
  const Pair p = textured_pair(64, 48, Twist());
  CHECK_THROWS_AS((void)residuals(p.prev, p.cur, Twist(), Mask(64, 48, 0), p.K, {}), DegenerateError);
  CHECK_THROWS_AS((void)estimate_pose(p.prev, p.cur, Mask(64, 48, 0), Twist(), {}, p.K), DegenerateResidualError);
}

TEST_CASE("the current-frame gate removes pixels") {
  const Pair p = textured_pair(64, 48, Twist());
  Mask cur_gate(64, 48, 1);
  for (int x = 0; x < 64; ++x) cur_gate(x, 0) = 0;
  const ResidualReport r = residuals(p.prev, p.cur, Twist(), {}, p.K, {}, cur_gate);
  CHECK(r.count == 64 * 47);
}

TEST_CASE("cost at the true motion is far below the cost at zero") {
  // Coarse texture keeps bilinear resampling error well below the bound.
  const Twist motion(Eigen::Vector3d(0.02, -0.01, 0.015), Eigen::Vector3d::Zero());
  const Pair p = textured_pair(160, 120, motion, 0.2);
  const ResidualReport at_truth = residuals(p.prev, p.cur, p.truth, {}, p.K, {});
  const ResidualReport at_zero = residuals(p.prev, p.cur, Twist(), {}, p.K, {});
  CHECK(at_truth.cost < at_zero.cost);
  CHECK(at_truth.cost < 1e-6 * at_truth.count);
}

TEST_CASE("residual weights respect the cutoff") {
  const Twist motion(Eigen::Vector3d(0.05, 0, 0), Eigen::Vector3d::Zero());
  const Pair p = textured_pair(64, 48, motion);
  DvoParams params;
  const ResidualReport r = residuals(p.prev, p.cur, Twist(), {}, p.K, params);
  for (std::size_t i = 0; i < r.weight.size(); ++i) {
    CHECK(r.weight[i] >= 0.0);
    CHECK(r.weight[i] <= 1.0);
    if (r.contributing[i] && std::abs(r.photometric[i]) > params.k_I) CHECK(r.weight[i] == 0.0);
  }
}

TEST_CASE("analytic Jacobian agrees with finite differences") {
  std::mt19937_64 rng(21);
  const Pair p = textured_pair(64, 48, Twist(Eigen::Vector3d(0.01, 0.0, 0.0), Eigen::Vector3d::Zero()));
  for (int trial = 0; trial < 10; ++trial) {
    const Twist xi = oracle::random_twist(rng, 0.02, 0.01);
    const oracle::JacobianCheck c = oracle::check_jacobian(p.prev, p.cur, xi, p.K, DvoParams{}.gamma);
    CHECK(c.rows > 500);
    CHECK(c.relative_error <= 1e-4);
  }
}

TEST_CASE("identical frames estimate the zero twist") {
  const Pair p = textured_pair(80, 60, Twist());
  const PoseEstimate e = estimate_pose(p.prev, p.prev, {}, Twist(), {}, p.K);
  CHECK(e.xi.vector().norm() == 0.0);
}

TEST_CASE("recovers a small known motion") {
  const Twist motion(Eigen::Vector3d(0.006, -0.004, 0.01), Eigen::Vector3d(0.002, -0.003, 0.001));
  const Pair p = textured_pair(160, 120, motion);
  const PoseEstimate e = estimate_pose(p.prev, p.cur, {}, Twist(), {}, p.K);
  CHECK((e.xi.v - p.truth.v).norm() < 1e-3);
  CHECK((e.xi.w - p.truth.w).norm() < 1e-3);
  for (const auto& level : e.accepted_costs) {
    for (std::size_t i = 1; i < level.size(); ++i) CHECK(level[i] < level[i - 1]);
  }
}

TEST_CASE("masking a dominant moving object beats the robust cost alone") {
  const SceneSpec s = make_suite("dominant_object", 160, 120);
  // Frame pair where the panel covers most of the view.
  const int i = 40;
  const SynthFrame a = render_frame(s, i - 1);
  const SynthFrame b = render_frame(s, i);
  const Twist truth = log_se3(a.pose.inverse() * b.pose);
  // Background map from ground truth: the occlusion module's job, here exact.
  Mask B(a.gt_mask.width(), a.gt_mask.height(), 1);
  for (std::size_t k = 0; k < B.size(); ++k) B[k] = a.gt_mask[k] ? 0 : 1;
  Mask Bcur(B.width(), B.height(), 1);
  for (std::size_t k = 0; k < B.size(); ++k) Bcur[k] = b.gt_mask[k] ? 0 : 1;
  const PoseEstimate masked = estimate_pose(a.rgbd(), b.rgbd(), B, Twist(), {}, s.intrinsics, Bcur);
  const PoseEstimate robust = estimate_pose(a.rgbd(), b.rgbd(), {}, Twist(), {}, s.intrinsics);
  const double e_masked = (masked.xi.vector() - truth.vector()).norm();
  const double e_robust = (robust.xi.vector() - truth.vector()).norm();
  CHECK(e_masked < e_robust);
}

TEST_CASE("odometry parameter validation") {
  DvoParams p;
  CHECK_NOTHROW(p.validate());
  p.k_I = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.pyramid_levels = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
