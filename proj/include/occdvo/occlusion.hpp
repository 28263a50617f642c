#pragma once

// Moving-object detection by occlusion accumulation.
//
// Every twist in this module is the relative motion of the current frame
// with respect to the previous one: exp(xi) maps current-frame points into
// the previous camera frame, and w(u, xi) takes a current pixel into the
// previous image.

#include <optional>

#include "occdvo/components.hpp"
#include "occdvo/geometry.hpp"
#include "occdvo/image.hpp"

namespace occdvo {

/// How the depth difference enters the new-area prediction average.
enum class NewAreaGradient {
  /// A(d) + Z(d) - Z(u): keeps A equal to (reference depth - current depth)
  /// across the boundary, so background next to an object predicts ~0.
  kDepthConsistent,
  /// A(d) + Z(u) - Z(d): the gradient term added with the opposite sign.
  kAdditive,
};

struct OcclusionParams {
  double alpha = 0.02;        // tau_alpha(u) = alpha * Z(u)^2   [1/m]
  double beta = 0.02;         // tau_beta(u)  = beta  * Z(u)^2   [1/m]
  int min_component_px = 200;
  int border_margin_px = 0;
  Connectivity connectivity = Connectivity::kFour;
  bool predict_new_area = true;
  NewAreaGradient new_area_gradient = NewAreaGradient::kDepthConsistent;

  void validate() const;

  [[nodiscard]] double tau_alpha(double z) const { return alpha * z * z; }
  [[nodiscard]] double tau_beta(double z) const { return beta * z * z; }
};

/// Per-pixel result of comparing the warped previous depth with the current
/// depth.
struct OcclusionMap {
  Grid<double> dz;    // Z_prev(w(u)) - z of the warped point; 0 where invalid
  Mask valid;         // dz carries a measurement
  Mask new_area;      // w(u) leaves the image (or lands behind the camera)
  Grid<double> warp_x;  // w(u); meaningful where in_frame is set
  Grid<double> warp_y;
  Mask in_frame;

  [[nodiscard]] std::size_t new_area_count() const;
};

/// dz(u) = Z_prev(w(u, xi)) - [exp(xi) * unproject(u, Z_cur(u))]_z.
/// Invalid where Z_cur(u) is unmeasured, where the bilinear depth sample is
/// invalid, or where w(u) leaves the image; the latter pixels form the newly
/// discovered area.
[[nodiscard]] OcclusionMap occlusion_map(const DepthImage& Z_prev, const DepthImage& Z_cur, const Twist& xi,
                                         const CameraIntrinsics& K);

/// A(u) = dz(u) + bilinear(A_prev_truncated, w(u)); the warped term is 0
/// outside the image and invalid dz contributes 0.
[[nodiscard]] Grid<double> accumulate(const Grid<double>& A_prev_truncated, const OcclusionMap& om);

/// Zeroes A where A <= tau_alpha (noise floor) or where dz <= -tau_beta
/// (background reappearance).
[[nodiscard]] Grid<double> truncate(const Grid<double>& A, const OcclusionMap& om, const DepthImage& Z_cur,
                                    const OcclusionParams& params);

/// Per-pixel threshold only: 0 where A > tau_alpha, else 1.
[[nodiscard]] Mask threshold_background(const Grid<double>& A, const DepthImage& Z_cur,
                                        const OcclusionParams& params);

/// Background map B (1 = background, 0 = moving object): per-pixel threshold,
/// then object components smaller than min_component_px and the border
/// margin are returned to background.
[[nodiscard]] Mask background_mask(const Grid<double>& A, const DepthImage& Z_cur, const OcclusionParams& params);

/// 255 where B = 0, 0 elsewhere.
[[nodiscard]] Mask object_mask(const Mask& background);

/// Fills unmeasured pixels of Z_cur from the previous depth image seen
/// through w(u, xi). The depth needed to warp an unmeasured pixel is found by
/// fixed-point iteration starting from Z_prev at the same pixel. Measured
/// pixels are never changed.
[[nodiscard]] DepthImage compensate_depth(const DepthImage& Z_cur, const DepthImage& Z_prev, const Twist& xi,
                                          const CameraIntrinsics& K);

/// Predicts A on the newly discovered area by breadth-first sweeps from the
/// known region: each frontier pixel takes the mean over its known
/// neighbors d of A(d) +/- (Z(u) - Z(d)). Predicted object components that
/// do not touch an already-known object pixel are reset to 0.
[[nodiscard]] Grid<double> predict_new_area(const Grid<double>& A, const DepthImage& Z_cur, const Mask& new_area,
                                            const OcclusionParams& params);

/// Detector state carried between frames.
struct AccumulationState {
  Grid<double> A;   // truncated accumulation map
  Mask B;           // background map, 1 = background
  DepthImage Z_prev;  // compensated depth of the last frame
  IntensityImage I_prev;
  int frame_index = 0;

  [[nodiscard]] static AccumulationState initial(const IntensityImage& I, const DepthImage& Z);
};

/// Intermediate products of one step, kept for diagnostics and tests.
struct StepDiagnostics {
  OcclusionMap occlusion;
  Grid<double> accumulated;  // A before prediction and truncation
  Grid<double> predicted;    // A after prediction, before truncation
};

/// Advances the state by one frame: compensate depth, occlusion map,
/// accumulate, predict the new area, truncate, threshold. Returns the
/// object mask (255 = moving object).
Mask step(AccumulationState& state, const IntensityImage& I_cur, const DepthImage& Z_cur, const Twist& xi,
          const CameraIntrinsics& K, const OcclusionParams& params, StepDiagnostics* diagnostics = nullptr);

/// Convenience owner of an AccumulationState.
class OcclusionDetector {
 public:
  OcclusionDetector(const CameraIntrinsics& K, const OcclusionParams& params);

  /// First frame: A = 0, B = 1. Returns the (empty) object mask.
  Mask initialize(const IntensityImage& I, const DepthImage& Z);
  Mask process(const IntensityImage& I, const DepthImage& Z, const Twist& xi,
               StepDiagnostics* diagnostics = nullptr);

  [[nodiscard]] bool initialized() const { return state_.has_value(); }
  [[nodiscard]] const AccumulationState& state() const;
  [[nodiscard]] const OcclusionParams& params() const { return params_; }

 private:
  CameraIntrinsics K_;
  OcclusionParams params_;
  std::optional<AccumulationState> state_;
};

}  // namespace occdvo
