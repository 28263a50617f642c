#pragma once

// Dense RGB-D odometry with bi-square (Tukey) robust costs, Levenberg-Marquardt
// updates over an image pyramid, and residuals gated by a background mask.
//
// For a current pixel u with depth Z_cur(u) the warped location is
// w = w(u, xi) in the previous frame and
//   dI(u) = I_prev(w) - I_cur(u)
//   dZ(u) = Z_prev(w) - z of exp(xi) * unproject(u, Z_cur(u))
// The total cost is sum_u B(w) * [rho_kI(dI) + gamma * rho_kZ(dZ)], with B the
// previous frame's background map sampled at the nearest pixel to w. An
// optional current-frame map additionally drops pixels u with B_cur(u) = 0.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "occdvo/geometry.hpp"
#include "occdvo/image.hpp"

namespace occdvo {

/// Raised when too few pixels constrain the pose; carries the last estimate
/// that was still well posed.
class DegenerateResidualError : public DegenerateError {
 public:
  DegenerateResidualError(const std::string& what, const Twist& last_valid)
      : DegenerateError(what), last_valid_(last_valid) {}
  [[nodiscard]] const Twist& last_valid() const { return last_valid_; }

 private:
  Twist last_valid_;
};

struct DvoParams {
  double k_I = 48.0 / 255.0;
  double k_Z = 0.5;
  double gamma = 0.001;
  int pyramid_levels = 4;
  int max_iterations = 50;  // per level
  double lm_lambda_init = 1e-4;
  double lm_lambda_up = 10.0;
  double lm_lambda_down = 0.5;
  double convergence_eps = 1e-6;
  int min_pixels = 6;

  void validate() const;
};

/// Tukey bi-square cost (k^2/6)(1 - (1 - (e/k)^2)^3) for |e| <= k, k^2/6 beyond.
[[nodiscard]] double bisquare_rho(double e, double k);
/// IRLS weight rho'(e)/e = (1 - (e/k)^2)^2 for |e| <= k, 0 beyond.
[[nodiscard]] double bisquare_weight(double e, double k);
/// rho'(e) = e * bisquare_weight(e, k).
[[nodiscard]] double bisquare_derivative(double e, double k);

struct ResidualReport {
  Grid<double> photometric;  // dI, 0 where the pixel does not contribute
  Grid<double> geometric;    // dZ, 0 where the pixel does not contribute
  Grid<double> weight;       // bi-square weight of dI; 0 where not contributing
  Mask contributing;         // valid warp, valid samples and B(w) = 1
  double cost = 0.0;
  int count = 0;
};

/// Evaluates the gated residuals at xi. Throws DegenerateError when fewer
/// than params.min_pixels pixels contribute. Empty masks gate nothing.
[[nodiscard]] ResidualReport residuals(const RgbdFrame& prev, const RgbdFrame& cur, const Twist& xi,
                                       const Mask& background, const CameraIntrinsics& K, const DvoParams& params,
                                       const Mask& current_background = {});

/// Stacked residuals and their Jacobian with respect to a left increment
/// delta, T(delta) = exp(delta) * exp(xi). Only contributing pixels appear;
/// `pixels` lists their raster indices.
struct Linearization {
  Eigen::VectorXd photometric;
  Eigen::VectorXd geometric;
  Eigen::Matrix<double, Eigen::Dynamic, 6> J_photometric;
  Eigen::Matrix<double, Eigen::Dynamic, 6> J_geometric;
  std::vector<int> pixels;
};

[[nodiscard]] Linearization linearize(const RgbdFrame& prev, const RgbdFrame& cur, const RigidTransform& T,
                                      const Mask& background, const CameraIntrinsics& K,
                                      const Mask& current_background = {});

struct PoseEstimate {
  Twist xi;
  RigidTransform transform;  // exp(xi)
  ResidualReport report;     // at level 0
  int iterations = 0;        // accepted + rejected steps over all levels
  // Per level (coarsest first): initial cost followed by the cost after each
  // accepted step.
  std::vector<std::vector<double>> accepted_costs;
};

/// Coarse-to-fine LM from xi_init. Throws DegenerateResidualError or
/// NumericalError on a non-finite cost.
[[nodiscard]] PoseEstimate estimate_pose(const RgbdFrame& prev, const RgbdFrame& cur, const Mask& background,
                                         const Twist& xi_init, const DvoParams& params, const CameraIntrinsics& K,
                                         const Mask& current_background = {});

/// Same as above with prebuilt pyramids (levels must match params).
[[nodiscard]] PoseEstimate estimate_pose(const Pyramid& prev, const Pyramid& cur, const Mask& background,
                                         const Twist& xi_init, const DvoParams& params,
                                         const Mask& current_background = {});

}  // namespace occdvo
