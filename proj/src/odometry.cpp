#include "occdvo/odometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

namespace occdvo {

void DvoParams::validate() const {
  if (!(k_I > 0.0) || !(k_Z > 0.0)) throw ConfigError("bi-square thresholds must be positive");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  if (pyramid_levels < 1) throw ConfigError("pyramid_levels must be at least 1");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (!(lm_lambda_init >= 0.0) || !(lm_lambda_up > 1.0) || !(lm_lambda_down > 0.0 && lm_lambda_down < 1.0)) {
    throw ConfigError("invalid Levenberg-Marquardt damping schedule");
  }
  if (min_pixels < 6) throw ConfigError("min_pixels must be at least 6");
}

double bisquare_rho(double e, double k) {
  const double c = k * k / 6.0;
  if (std::abs(e) > k) return c;
  const double s = 1.0 - (e / k) * (e / k);
  return c * (1.0 - s * s * s);
}

double bisquare_weight(double e, double k) {
  if (std::abs(e) > k) return 0.0;
  const double s = 1.0 - (e / k) * (e / k);
  return s * s;
}

double bisquare_derivative(double e, double k) { return e * bisquare_weight(e, k); }

namespace {

struct PixelTerm {
  double dI = 0.0;
  double dZ = 0.0;
  Eigen::Matrix<double, 1, 6> J_I;
  Eigen::Matrix<double, 1, 6> J_Z;
};

// Residuals (and optionally Jacobians) of one current pixel; false if the
// pixel does not contribute.
bool pixel_term(const RgbdFrame& prev, const RgbdFrame& cur, const Warper& warper, const Mask& background,
                const Mask& current_background, int x, int y, bool with_jacobian, PixelTerm& out) {
  if (!current_background.empty() && current_background(x, y) == 0) return false;
  const double z = cur.depth(x, y);
  const WarpResult r = warper.apply({double(x), double(y)}, z);
  if (!r.ok()) return false;
  const int bx = static_cast<int>(std::lround(r.pixel.x));
  const int by = static_cast<int>(std::lround(r.pixel.y));
  if (!background.empty() && background(bx, by) == 0) return false;
  const auto Z = sample_bilinear_grad(prev.depth, r.pixel, true);
  if (!Z) return false;
  const auto I = sample_bilinear_grad(prev.intensity, r.pixel, false);
  if (!I) return false;
  out.dI = I->value - cur.intensity(x, y);
  out.dZ = Z->value - r.depth;
  if (!with_jacobian) return true;

  const CameraIntrinsics& K = warper.intrinsics();
  const Eigen::Vector3d p((x - K.cx) * z / K.fx, (y - K.cy) * z / K.fy, z);
  const Eigen::Vector3d q = warper.transform() * p;
  const double iz = 1.0 / q.z();
  Eigen::Matrix<double, 2, 3> dpi;
  dpi << K.fx * iz, 0.0, -K.fx * q.x() * iz * iz, 0.0, K.fy * iz, -K.fy * q.y() * iz * iz;
  // d q / d delta for q(delta) = exp(delta) q: [I, -[q]x].
  Eigen::Matrix<double, 3, 6> dq;
  dq.leftCols<3>().setIdentity();
  dq.rightCols<3>() = -skew(q);
  const Eigen::Matrix<double, 2, 6> dw = dpi * dq;
  out.J_I = I->dx * dw.row(0) + I->dy * dw.row(1);
  out.J_Z = Z->dx * dw.row(0) + Z->dy * dw.row(1) - dq.row(2);
  return true;
}

struct NormalSystem {
  Matrix6d H = Matrix6d::Zero();
  Vector6d g = Vector6d::Zero();
  double cost = 0.0;
  int count = 0;
};

NormalSystem build_system(const RgbdFrame& prev, const RgbdFrame& cur, const RigidTransform& T,
                          const Mask& background, const Mask& current_background, const CameraIntrinsics& K,
                          const DvoParams& params, bool with_jacobian) {
  const Warper warper(T, K);
  NormalSystem sys;
  PixelTerm term;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      if (!pixel_term(prev, cur, warper, background, current_background, x, y, with_jacobian, term)) continue;
      ++sys.count;
      sys.cost += bisquare_rho(term.dI, params.k_I) + params.gamma * bisquare_rho(term.dZ, params.k_Z);
      if (!with_jacobian) continue;
      const double wI = bisquare_weight(term.dI, params.k_I);
      const double wZ = params.gamma * bisquare_weight(term.dZ, params.k_Z);
      if (wI > 0.0) {
        sys.H.selfadjointView<Eigen::Upper>().rankUpdate(term.J_I.transpose(), wI);
        sys.g += wI * term.dI * term.J_I.transpose();
      }
      if (wZ > 0.0) {
        sys.H.selfadjointView<Eigen::Upper>().rankUpdate(term.J_Z.transpose(), wZ);
        sys.g += wZ * term.dZ * term.J_Z.transpose();
      }
    }
  }
  sys.H = sys.H.selfadjointView<Eigen::Upper>();
  return sys;
}

void check_level(const RgbdFrame& prev, const RgbdFrame& cur, const Mask& background, const Mask& current_background,
                 const CameraIntrinsics& K) {
  const auto ok = [&](const Grid<double>& g) { return g.width() == K.width && g.height() == K.height; };
  if (!ok(prev.intensity) || !ok(prev.depth) || !ok(cur.intensity) || !ok(cur.depth)) {
    throw ConfigError("frame dimensions do not match the camera");
  }
  if (!background.empty() && (background.width() != K.width || background.height() != K.height)) {
    throw ConfigError("background mask dimensions do not match the camera");
  }
  if (!current_background.empty() &&
      (current_background.width() != K.width || current_background.height() != K.height)) {
    throw ConfigError("current background mask dimensions do not match the camera");
  }
}

std::string describe(const Twist& xi) {
  std::ostringstream os;
  os.precision(9);
  os << "[" << xi.vector().transpose() << "]";
  return os.str();
}

}  // namespace

ResidualReport residuals(const RgbdFrame& prev, const RgbdFrame& cur, const Twist& xi, const Mask& background,
                         const CameraIntrinsics& K, const DvoParams& params, const Mask& current_background) {
  check_level(prev, cur, background, current_background, K);
  const Warper warper(exp_se3(xi), K);
  ResidualReport rep{Grid<double>(K.width, K.height, 0.0), Grid<double>(K.width, K.height, 0.0),
                     Grid<double>(K.width, K.height, 0.0), Mask(K.width, K.height, 0), 0.0, 0};
  PixelTerm term;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      if (!pixel_term(prev, cur, warper, background, current_background, x, y, false, term)) continue;
      rep.photometric(x, y) = term.dI;
      rep.geometric(x, y) = term.dZ;
      rep.weight(x, y) = bisquare_weight(term.dI, params.k_I);
      rep.contributing(x, y) = 1;
      rep.cost += bisquare_rho(term.dI, params.k_I) + params.gamma * bisquare_rho(term.dZ, params.k_Z);
      ++rep.count;
    }
  }
  if (rep.count < params.min_pixels) throw DegenerateResidualError("degenerate residual system", xi);
  return rep;
}

Linearization linearize(const RgbdFrame& prev, const RgbdFrame& cur, const RigidTransform& T, const Mask& background,
                        const CameraIntrinsics& K, const Mask& current_background) {
  check_level(prev, cur, background, current_background, K);
  const Warper warper(T, K);
  std::vector<PixelTerm> terms;
  Linearization lin;
  PixelTerm term;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      if (!pixel_term(prev, cur, warper, background, current_background, x, y, true, term)) continue;
      terms.push_back(term);
      lin.pixels.push_back(y * K.width + x);
    }
  }
  const auto n = static_cast<Eigen::Index>(terms.size());
  lin.photometric.resize(n);
  lin.geometric.resize(n);
  lin.J_photometric.resize(n, 6);
  lin.J_geometric.resize(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    lin.photometric(i) = terms[i].dI;
    lin.geometric(i) = terms[i].dZ;
    lin.J_photometric.row(i) = terms[i].J_I;
    lin.J_geometric.row(i) = terms[i].J_Z;
  }
  return lin;
}

PoseEstimate estimate_pose(const Pyramid& prev, const Pyramid& cur, const Mask& background, const Twist& xi_init,
                           const DvoParams& params, const Mask& current_background) {
  params.validate();
  if (!xi_init.finite()) throw ConfigError("initial twist is not finite");
  const int levels = std::min({params.pyramid_levels, prev.size(), cur.size()});

  const auto mask_pyramid = [levels](const Mask& base) {
    std::vector<Mask> out{base};
    for (int l = 1; l < levels; ++l) out.push_back(out.back().empty() ? Mask{} : downsample_mask(out.back()));
    return out;
  };
  const std::vector<Mask> masks = mask_pyramid(background);
  const std::vector<Mask> current_masks = mask_pyramid(current_background);

  PoseEstimate est;
  RigidTransform T = exp_se3(xi_init);
  Twist last_valid = xi_init;
  for (int level = levels - 1; level >= 0; --level) {
    const CameraIntrinsics& K = prev.intrinsics[level];
    const RgbdFrame& p = prev.levels[level];
    const RgbdFrame& c = cur.levels[level];
    const Mask& B = masks[level];
    const Mask& Bc = current_masks[level];
    check_level(p, c, B, Bc, K);

    NormalSystem sys = build_system(p, c, T, B, Bc, K, params, true);
    if (sys.count < params.min_pixels) {
      throw DegenerateResidualError("degenerate residual system at pyramid level " + std::to_string(level) +
                                        " (last valid twist " + describe(last_valid) + ")",
                                    last_valid);
    }
    if (!std::isfinite(sys.cost)) throw NumericalError("numerical failure: non-finite cost");
    std::vector<double> costs{sys.cost};
    double lambda = params.lm_lambda_init;
    bool relinearize = false;
    for (int it = 0; it < params.max_iterations; ++it) {
      if (relinearize) {
        sys = build_system(p, c, T, B, Bc, K, params, true);
        relinearize = false;
      }
      ++est.iterations;
      Matrix6d A = sys.H;
      A.diagonal() += lambda * (sys.H.diagonal().array() + 1e-12).matrix();
      const Vector6d delta = A.ldlt().solve(-sys.g);
      if (!delta.allFinite()) throw NumericalError("numerical failure: non-finite update");
      if (delta.norm() < params.convergence_eps) break;

      const RigidTransform candidate = exp_se3(Twist(delta)) * T;
      const NormalSystem trial = build_system(p, c, candidate, B, Bc, K, params, false);
      if (!std::isfinite(trial.cost)) throw NumericalError("numerical failure: non-finite cost");
      if (trial.count >= params.min_pixels && trial.cost < sys.cost) {
        T = candidate;
        last_valid = log_se3(T);
        costs.push_back(trial.cost);
        lambda *= params.lm_lambda_down;
        relinearize = true;
      } else {
        lambda = std::max(lambda, 1e-12) * params.lm_lambda_up;
      }
    }
    est.accepted_costs.push_back(std::move(costs));
  }

  est.transform = T;
  est.xi = log_se3(T);
  est.report =
      residuals(prev.levels[0], cur.levels[0], est.xi, background, prev.intrinsics[0], params, current_background);
  return est;
}

PoseEstimate estimate_pose(const RgbdFrame& prev, const RgbdFrame& cur, const Mask& background, const Twist& xi_init,
                           const DvoParams& params, const CameraIntrinsics& K, const Mask& current_background) {
  params.validate();
  return estimate_pose(build_pyramid(prev, K, params.pyramid_levels), build_pyramid(cur, K, params.pyramid_levels),
                       background, xi_init, params, current_background);
}

}  // namespace occdvo
