#pragma once

// Pinhole projection, SE(3) exponential/logarithm and per-pixel warping.
//
// Conventions used throughout the library:
//   * pixel coordinates are (column, row) with the origin at the center of
//     the top-left pixel, so pixel (c, r) covers [c - 0.5, c + 0.5];
//   * camera frame is z forward, x right, y down;
//   * a relative twist between consecutive frames maps points expressed in
//     the current camera frame into the previous camera frame, i.e.
//     exp(xi) = T_prev_cur = P_prev^-1 * P_cur for world-from-camera poses.

#include <Eigen/Core>

#include "occdvo/errors.hpp"

namespace occdvo {

class DepthImage;

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  /// Throws ConfigError unless fx, fy > 0 and the principal point lies
  /// strictly inside the image.
  void validate() const;

  /// Intrinsics of the image obtained by 2x2 block averaging.
  [[nodiscard]] CameraIntrinsics half() const;

  /// Scales a 640x480 Kinect-style calibration to the given resolution.
  [[nodiscard]] static CameraIntrinsics kinect_scaled(int width, int height);
};

struct Pixel {
  double x = 0.0;
  double y = 0.0;
};

/// True when p lies in the continuous image domain [0, w-1] x [0, h-1].
[[nodiscard]] bool inside(const Pixel& p, int width, int height);
[[nodiscard]] inline bool inside(const Pixel& p, const CameraIntrinsics& k) {
  return inside(p, k.width, k.height);
}

/// 6-DOF motion parameter: translational part v (meters) and rotational
/// part w (radians). Stacked as (v, w).
struct Twist {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d w = Eigen::Vector3d::Zero();

  Twist() = default;
  Twist(const Eigen::Vector3d& v_, const Eigen::Vector3d& w_) : v(v_), w(w_) {}
  explicit Twist(const Vector6d& xi) : v(xi.head<3>()), w(xi.tail<3>()) {}

  [[nodiscard]] Vector6d vector() const {
    Vector6d out;
    out << v, w;
    return out;
  }
  [[nodiscard]] bool finite() const { return v.allFinite() && w.allFinite(); }
  [[nodiscard]] Twist operator-() const { return Twist(-v, -w); }
};

struct RigidTransform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  RigidTransform() = default;
  RigidTransform(const Eigen::Matrix3d& R_, const Eigen::Vector3d& t_) : R(R_), t(t_) {}

  [[nodiscard]] static RigidTransform identity() { return {}; }
  [[nodiscard]] static RigidTransform translation(const Eigen::Vector3d& t) {
    return {Eigen::Matrix3d::Identity(), t};
  }

  [[nodiscard]] Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return R * p + t; }
  [[nodiscard]] RigidTransform operator*(const RigidTransform& o) const {
    return {R * o.R, R * o.t + t};
  }
  [[nodiscard]] RigidTransform inverse() const {
    const Eigen::Matrix3d Rt = R.transpose();
    return {Rt, -Rt * t};
  }
  [[nodiscard]] Eigen::Matrix4d matrix() const;

  /// Orthonormality and det(R) = 1 within tol per entry.
  [[nodiscard]] bool is_valid(double tol = 1e-9) const;
};

[[nodiscard]] Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Closed-form SE(3) exponential; Taylor expansion below |w| = 1e-8.
[[nodiscard]] RigidTransform exp_se3(const Twist& xi);

/// Inverse of exp_se3. Throws GeometryError("near-singular logarithm") when
/// the rotation angle is within 1e-3 of pi.
[[nodiscard]] Twist log_se3(const RigidTransform& T);

/// Rotation angle of R in radians, in [0, pi].
[[nodiscard]] double rotation_angle(const Eigen::Matrix3d& R);

/// Pinhole projection. Throws GeometryError("behind camera") when p.z <= 0.
[[nodiscard]] Pixel project(const Eigen::Vector3d& p, const CameraIntrinsics& K);

/// Back-projection of pixel u at depth z. Throws GeometryError("invalid depth")
/// when z <= 0.
[[nodiscard]] Eigen::Vector3d unproject(const Pixel& u, double z, const CameraIntrinsics& K);

enum class WarpStatus { kOk, kOutOfFrame, kInvalidDepth, kBehindCamera };

struct WarpResult {
  WarpStatus status = WarpStatus::kInvalidDepth;
  Pixel pixel;          // warped location (meaningful for kOk / kOutOfFrame)
  double depth = 0.0;   // z of the transformed point in the target frame

  [[nodiscard]] bool ok() const { return status == WarpStatus::kOk; }
};

/// Precomputed warp w(u, xi) for a fixed transform; the per-pixel kernel used
/// by the occlusion and odometry passes.
class Warper {
 public:
  Warper(const RigidTransform& T, const CameraIntrinsics& K);

  /// Warps pixel u with depth z (0 = invalid) through T.
  [[nodiscard]] WarpResult apply(const Pixel& u, double z) const;

  [[nodiscard]] const RigidTransform& transform() const { return T_; }
  [[nodiscard]] const CameraIntrinsics& intrinsics() const { return K_; }

 private:
  RigidTransform T_;
  CameraIntrinsics K_;
  bool identity_;  // exact identity: warp returns u unchanged
};

/// w(u, xi) = project(exp(xi) * unproject(u, Z(u))). Z is sampled at the
/// nearest pixel to u. Throws ConfigError when u lies outside the image.
[[nodiscard]] WarpResult warp(const Pixel& u, const DepthImage& Z, const Twist& xi,
                              const CameraIntrinsics& K);

}  // namespace occdvo
