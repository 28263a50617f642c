#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "occdvo/geometry.hpp"
#include "occdvo/image.hpp"
#include "../support/oracles.hpp"

using namespace occdvo;

namespace {

CameraIntrinsics small_camera() {
  CameraIntrinsics K;
  K.fx = K.fy = 100.0;
  K.cx = 32.0;
  K.cy = 24.0;
  K.width = 64;
  K.height = 48;
  return K;
}

}  // namespace

TEST_CASE("exp of the zero twist is the identity") {
  const RigidTransform T = exp_se3(Twist());
  CHECK(T.R == Eigen::Matrix3d::Identity());
  CHECK(T.t == Eigen::Vector3d::Zero());
}

TEST_CASE("exp of a pure translation") {
  const RigidTransform T = exp_se3(Twist(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d::Zero()));
  CHECK(T.R.isApprox(Eigen::Matrix3d::Identity(), 0.0));
  CHECK((T.t - Eigen::Vector3d(1, 0, 0)).norm() == doctest::Approx(0.0));
}

TEST_CASE("exp of a quarter turn about z matches the dense matrix exponential") {
  const Twist xi(Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, std::numbers::pi / 2));
  const RigidTransform T = exp_se3(xi);
  const Eigen::Matrix4d ref = oracle::expm(oracle::hat(xi));
  CHECK((T.matrix() - ref).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((T.R * Eigen::Vector3d(1, 0, 0) - Eigen::Vector3d(0, 1, 0)).norm() < 1e-9);
  CHECK(T.t.norm() < 1e-12);
}

TEST_CASE("exp agrees with the dense matrix exponential on random twists") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Twist xi = oracle::random_twist(rng, 2.0, 1.2);
    const Eigen::Matrix4d ref = oracle::expm(oracle::hat(xi));
    CHECK((exp_se3(xi).matrix() - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("exp near zero rotation uses a stable expansion") {
  const Twist xi(Eigen::Vector3d(0.3, -0.2, 0.1), Eigen::Vector3d(1e-10, -2e-10, 5e-11));
  const Eigen::Matrix4d ref = oracle::expm(oracle::hat(xi));
  CHECK((exp_se3(xi).matrix() - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("log of the identity and of a pure translation") {
  CHECK(log_se3(RigidTransform::identity()).vector().norm() == 0.0);
  const Twist xi = log_se3(RigidTransform::translation({0, 0, 5}));
  CHECK((xi.vector() - (Vector6d() << 0, 0, 5, 0, 0, 0).finished()).norm() < 1e-12);
}

TEST_CASE("log rejects rotations close to a half turn") {
  const Eigen::Matrix3d R = Eigen::AngleAxisd(std::numbers::pi - 5e-4, Eigen::Vector3d::UnitX()).toRotationMatrix();
  CHECK_THROWS_AS((void)log_se3(RigidTransform(R, Eigen::Vector3d::Zero())), GeometryError);
  const Eigen::Matrix3d ok = Eigen::AngleAxisd(std::numbers::pi - 2e-3, Eigen::Vector3d::UnitX()).toRotationMatrix();
  CHECK_NOTHROW((void)log_se3(RigidTransform(ok, Eigen::Vector3d::Zero())));
}

TEST_CASE("exp and log round trip") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const Twist xi = oracle::random_twist(rng, 1.5, 1.5);
    CHECK((log_se3(exp_se3(xi)).vector() - xi.vector()).norm() < 1e-7);
  }
}

TEST_CASE("exp produces valid rigid transforms") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    CHECK(exp_se3(oracle::random_twist(rng, 3.0, 3.0)).is_valid(1e-9));
  }
}

TEST_CASE("rotation angle") {
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  CHECK(rotation_angle(R) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(rotation_angle(Eigen::Matrix3d::Identity()) == 0.0);
}

TEST_CASE("project on the optical axis gives the principal point") {
  const CameraIntrinsics K = small_camera();
  for (double z : {0.1, 1.0, 7.5}) {
    const Pixel p = project({0, 0, z}, K);
    CHECK(p.x == K.cx);
    CHECK(p.y == K.cy);
  }
}

TEST_CASE("project by hand arithmetic") {
  const Pixel p = project({0.5, 0.25, 1.0}, small_camera());
  CHECK(p.x == doctest::Approx(100.0 * 0.5 / 1.0 + 32.0));
  CHECK(p.y == doctest::Approx(100.0 * 0.25 / 1.0 + 24.0));
  CHECK(p.x == doctest::Approx(82.0));
  CHECK(p.y == doctest::Approx(49.0));
}

TEST_CASE("project rejects points behind the camera") {
  CHECK_THROWS_AS((void)project({0, 0, 0}, small_camera()), GeometryError);
  CHECK_THROWS_AS((void)project({1, 0, -1}, small_camera()), GeometryError);
}

TEST_CASE("unproject") {
  const CameraIntrinsics K = small_camera();
  const Eigen::Vector3d c = unproject({K.cx, K.cy}, 2.0, K);
  CHECK((c - Eigen::Vector3d(0, 0, 2)).norm() == 0.0);
  const Eigen::Vector3d p = unproject({82.0, 49.0}, 1.0, K);
  CHECK((p - Eigen::Vector3d(0.5, 0.25, 1.0)).norm() < 1e-12);
  CHECK_THROWS_AS((void)unproject({1, 1}, 0.0, K), GeometryError);
  CHECK_THROWS_AS((void)unproject({1, 1}, -1.0, K), GeometryError);
}

TEST_CASE("project and unproject are inverse") {
  const CameraIntrinsics K = CameraIntrinsics::kinect_scaled(320, 240);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0, K.width - 1), uy(0, K.height - 1), uz(0.2, 8.0);
  for (int i = 0; i < 1000; ++i) {
    const Pixel u{ux(rng), uy(rng)};
    const Pixel back = project(unproject(u, uz(rng), K), K);
    CHECK(std::abs(back.x - u.x) < 1e-9);
    CHECK(std::abs(back.y - u.y) < 1e-9);
  }
}

TEST_CASE("warp with the zero twist returns the pixel exactly") {
  const CameraIntrinsics K = small_camera();
  DepthImage Z(K.width, K.height, 1.3);
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const WarpResult r = warp({double(x), double(y)}, Z, Twist(), K);
      REQUIRE(r.ok());
      CHECK(r.pixel.x == x);
      CHECK(r.pixel.y == y);
    }
  }
}

TEST_CASE("warp of a fronto-parallel plane under translation shifts by fx t") {
  const CameraIntrinsics K = small_camera();
  DepthImage Z(K.width, K.height, 1.0);
  const double tx = 0.05;
  const Twist xi(Eigen::Vector3d(tx, 0, 0), Eigen::Vector3d::Zero());
  for (int y = 0; y < K.height; y += 3) {
    for (int x = 0; x < K.width - 6; x += 3) {
      const WarpResult r = warp({double(x), double(y)}, Z, xi, K);
      REQUIRE(r.ok());
      CHECK(r.pixel.x == doctest::Approx(x + K.fx * tx));
      CHECK(r.pixel.y == doctest::Approx(double(y)));
      CHECK(r.depth == doctest::Approx(1.0));
    }
  }
  const WarpResult out = warp({double(K.width - 1), 0.0}, Z, xi, K);
  CHECK(out.status == WarpStatus::kOutOfFrame);
}

TEST_CASE("warp of an unmeasured pixel reports invalid depth") {
  const CameraIntrinsics K = small_camera();
  DepthImage Z(K.width, K.height, 1.0);
  Z(5, 5) = DepthImage::kInvalid;
  CHECK(warp({5, 5}, Z, Twist(), K).status == WarpStatus::kInvalidDepth);
}

TEST_CASE("warp behind the camera") {
  const CameraIntrinsics K = small_camera();
  DepthImage Z(K.width, K.height, 1.0);
  const Twist xi(Eigen::Vector3d(0, 0, -2.0), Eigen::Vector3d::Zero());
  CHECK(warp({10, 10}, Z, xi, K).status == WarpStatus::kBehindCamera);
}

TEST_CASE("intrinsics validation and scaling") {
  CameraIntrinsics K = small_camera();
  CHECK_NOTHROW(K.validate());
  K.fx = 0;
  CHECK_THROWS_AS(K.validate(), ConfigError);
  const CameraIntrinsics k = CameraIntrinsics::kinect_scaled(320, 240);
  CHECK(k.fx == doctest::Approx(262.5));
  CHECK(k.width == 320);
}
