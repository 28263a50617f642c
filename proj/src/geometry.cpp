#include "occdvo/geometry.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "occdvo/image.hpp"

namespace occdvo {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ConfigError("image dimensions must be positive");
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw ConfigError("principal point must lie inside the image");
  }
}

CameraIntrinsics CameraIntrinsics::half() const {
  // Block (2i, 2i+1) averages to a pixel centered at 2i + 0.5.
  CameraIntrinsics k;
  k.fx = fx * 0.5;
  k.fy = fy * 0.5;
  k.cx = (cx + 0.5) * 0.5 - 0.5;
  k.cy = (cy + 0.5) * 0.5 - 0.5;
  k.width = (width + 1) / 2;
  k.height = (height + 1) / 2;
  return k;
}

CameraIntrinsics CameraIntrinsics::kinect_scaled(int width, int height) {
  const double sx = width / 640.0;
  const double sy = height / 480.0;
  CameraIntrinsics k;
  k.fx = 525.0 * sx;
  k.fy = 525.0 * sy;
  k.cx = (319.5 + 0.5) * sx - 0.5;
  k.cy = (239.5 + 0.5) * sy - 0.5;
  k.width = width;
  k.height = height;
  return k;
}

bool inside(const Pixel& p, int width, int height) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= width - 1 && p.y <= height - 1;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = R;
  m.topRightCorner<3, 1>() = t;
  return m;
}

bool RigidTransform::is_valid(double tol) const {
  if (!R.allFinite() || !t.allFinite()) return false;
  const Eigen::Matrix3d e = R.transpose() * R - Eigen::Matrix3d::Identity();
  return e.cwiseAbs().maxCoeff() <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

RigidTransform exp_se3(const Twist& xi) {
  const Eigen::Matrix3d W = skew(xi.w);
  const Eigen::Matrix3d W2 = W * W;
  const double theta2 = xi.w.squaredNorm();
  const double theta = std::sqrt(theta2);

  double a, b, c;  // R = I + aW + bW^2, V = I + bW + cW^2
  if (theta < 1e-8) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
    c = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    const double s = std::sin(theta);
    const double sh = std::sin(0.5 * theta);
    a = s / theta;
    b = 2.0 * sh * sh / theta2;
    c = (theta - s) / (theta2 * theta);
  }
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d R = I + a * W + b * W2;
  const Eigen::Matrix3d V = I + b * W + c * W2;
  return {R, V * xi.v};
}

double rotation_angle(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (R.trace() - 1.0));
}

Twist log_se3(const RigidTransform& T) {
  const Eigen::Vector3d vee(T.R(2, 1) - T.R(1, 2), T.R(0, 2) - T.R(2, 0), T.R(1, 0) - T.R(0, 1));
  const double theta = rotation_angle(T.R);
  if (theta > std::numbers::pi - 1e-3) throw GeometryError("near-singular logarithm");

  Eigen::Vector3d w;
  double d;  // V^-1 = I - W/2 + d W^2
  const double theta2 = theta * theta;
  if (theta < 1e-4) {
    w = 0.5 * (1.0 + theta2 / 6.0) * vee;
    d = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    const double half = 0.5 * theta;
    w = theta / (2.0 * std::sin(theta)) * vee;
    d = (1.0 - half * std::cos(half) / std::sin(half)) / theta2;
  }
  const Eigen::Matrix3d W = skew(w);
  const Eigen::Matrix3d Vinv = Eigen::Matrix3d::Identity() - 0.5 * W + d * W * W;
  return {Vinv * T.t, w};
}

Pixel project(const Eigen::Vector3d& p, const CameraIntrinsics& K) {
  if (!(p.z() > 0.0)) throw GeometryError("behind camera");
  return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

Eigen::Vector3d unproject(const Pixel& u, double z, const CameraIntrinsics& K) {
  if (!(z > 0.0)) throw GeometryError("invalid depth");
  return {(u.x - K.cx) * z / K.fx, (u.y - K.cy) * z / K.fy, z};
}

Warper::Warper(const RigidTransform& T, const CameraIntrinsics& K)
    : T_(T), K_(K), identity_(T.R == Eigen::Matrix3d::Identity() && T.t.isZero(0.0)) {}

WarpResult Warper::apply(const Pixel& u, double z) const {
  WarpResult r;
  if (!(z > 0.0)) {
    r.status = WarpStatus::kInvalidDepth;
    return r;
  }
  if (identity_) {
    r.depth = z;
    r.pixel = u;
    r.status = inside(u, K_) ? WarpStatus::kOk : WarpStatus::kOutOfFrame;
    return r;
  }
  const Eigen::Vector3d p((u.x - K_.cx) * z / K_.fx, (u.y - K_.cy) * z / K_.fy, z);
  const Eigen::Vector3d q = T_ * p;
  r.depth = q.z();
  if (!(q.z() > 0.0)) {
    r.status = WarpStatus::kBehindCamera;
    return r;
  }
  r.pixel = {K_.fx * q.x() / q.z() + K_.cx, K_.fy * q.y() / q.z() + K_.cy};
  r.status = inside(r.pixel, K_) ? WarpStatus::kOk : WarpStatus::kOutOfFrame;
  return r;
}

WarpResult warp(const Pixel& u, const DepthImage& Z, const Twist& xi, const CameraIntrinsics& K) {
  if (Z.width() != K.width || Z.height() != K.height) {
    throw ConfigError("depth image does not match intrinsics");
  }
  if (!inside(u, K)) throw ConfigError("warp source pixel outside the image");
  const int x = static_cast<int>(std::lround(u.x));
  const int y = static_cast<int>(std::lround(u.y));
  return Warper(exp_se3(xi), K).apply(u, Z(x, y));
}

}  // namespace occdvo
