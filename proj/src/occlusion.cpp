#include "occdvo/occlusion.hpp"

#include <cmath>

namespace occdvo {

void OcclusionParams::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (min_component_px < 0) throw ConfigError("min_component_px must be non-negative");
  if (border_margin_px < 0) throw ConfigError("border_margin_px must be non-negative");
}

std::size_t OcclusionMap::new_area_count() const {
  std::size_t n = 0;
  for (auto v : new_area.data()) n += v != 0;
  return n;
}

namespace {

void require_shape(const CameraIntrinsics& K, const Grid<double>& g, const char* what) {
  if (g.width() != K.width || g.height() != K.height) {
    throw ConfigError(std::string(what) + " does not match the camera dimensions");
  }
}

}  // namespace

OcclusionMap occlusion_map(const DepthImage& Z_prev, const DepthImage& Z_cur, const Twist& xi,
                           const CameraIntrinsics& K) {
  require_shape(K, Z_prev, "previous depth");
  require_shape(K, Z_cur, "current depth");
  const int w = K.width;
  const int h = K.height;
  OcclusionMap om{Grid<double>(w, h, 0.0), Mask(w, h, 0), Mask(w, h, 0),
                  Grid<double>(w, h, 0.0), Grid<double>(w, h, 0.0), Mask(w, h, 0)};
  const Warper warper(exp_se3(xi), K);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const WarpResult r = warper.apply({double(x), double(y)}, Z_cur(x, y));
      if (r.status == WarpStatus::kInvalidDepth) continue;
      if (!r.ok()) {
        om.new_area(x, y) = 1;
        continue;
      }
      om.in_frame(x, y) = 1;
      om.warp_x(x, y) = r.pixel.x;
      om.warp_y(x, y) = r.pixel.y;
      if (const auto s = sample_bilinear(Z_prev, r.pixel)) {
        om.dz(x, y) = *s - r.depth;
        om.valid(x, y) = 1;
      }
    }
  }
  return om;
}

Grid<double> accumulate(const Grid<double>& A_prev_truncated, const OcclusionMap& om) {
  if (!A_prev_truncated.same_shape(om.dz)) throw ConfigError("accumulation map does not match occlusion map");
  Grid<double> A(om.dz.width(), om.dz.height(), 0.0);
  for (int y = 0; y < A.height(); ++y) {
    for (int x = 0; x < A.width(); ++x) {
      if (!om.in_frame(x, y)) continue;
      const double carried = sample_bilinear(A_prev_truncated, {om.warp_x(x, y), om.warp_y(x, y)}).value_or(0.0);
      A(x, y) = (om.valid(x, y) ? om.dz(x, y) : 0.0) + carried;
    }
  }
  return A;
}

Grid<double> truncate(const Grid<double>& A, const OcclusionMap& om, const DepthImage& Z_cur,
                      const OcclusionParams& params) {
  if (!A.same_shape(om.dz) || !A.same_shape(Z_cur)) throw ConfigError("truncate: grid dimensions differ");
  Grid<double> out = A;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double z = Z_cur[i];
    if (out[i] <= params.tau_alpha(z)) {
      out[i] = 0.0;
    } else if (om.valid[i] && om.dz[i] <= -params.tau_beta(z)) {
      out[i] = 0.0;
    }
  }
  return out;
}

Mask threshold_background(const Grid<double>& A, const DepthImage& Z_cur, const OcclusionParams& params) {
  if (!A.same_shape(Z_cur)) throw ConfigError("background_mask: grid dimensions differ");
  Mask B(A.width(), A.height(), 1);
  for (std::size_t i = 0; i < B.size(); ++i) {
    if (A[i] > params.tau_alpha(Z_cur[i])) B[i] = 0;
  }
  return B;
}

Mask background_mask(const Grid<double>& A, const DepthImage& Z_cur, const OcclusionParams& params) {
  Mask B = threshold_background(A, Z_cur, params);
  const int w = B.width();
  const int h = B.height();
  const int m = params.border_margin_px;
  if (m > 0) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (x < m || y < m || x >= w - m || y >= h - m) B(x, y) = 1;
      }
    }
  }
  if (params.min_component_px > 0) {
    Mask objects(w, h, 0);
    for (std::size_t i = 0; i < B.size(); ++i) objects[i] = B[i] == 0;
    const Components cc = label_components(objects, params.connectivity);
    for (std::size_t i = 0; i < B.size(); ++i) {
      const int label = cc.labels[i];
      if (label > 0 && cc.areas[label - 1] < params.min_component_px) B[i] = 1;
    }
  }
  return B;
}

Mask object_mask(const Mask& background) {
  Mask out(background.width(), background.height(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = background[i] == 0 ? 255 : 0;
  return out;
}

DepthImage compensate_depth(const DepthImage& Z_cur, const DepthImage& Z_prev, const Twist& xi,
                            const CameraIntrinsics& K) {
  require_shape(K, Z_prev, "previous depth");
  require_shape(K, Z_cur, "current depth");
  constexpr int kMaxIterations = 8;
  const RigidTransform T = exp_se3(xi);
  const RigidTransform T_inv = T.inverse();
  const Warper warper(T, K);
  DepthImage out = Z_cur;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      if (Z_cur.valid(x, y)) continue;
      const Pixel u{double(x), double(y)};
      double d = Z_prev(x, y);
      bool converged = false;
      for (int it = 0; it < kMaxIterations && d > 0.0; ++it) {
        const WarpResult r = warper.apply(u, d);
        if (!r.ok()) break;
        const auto s = sample_bilinear(Z_prev, r.pixel);
        if (!s) break;
        const double next = (T_inv * unproject(r.pixel, *s, K)).z();
        converged = std::abs(next - d) <= 1e-9 * std::max(1.0, d);
        d = next;
        if (converged) break;
      }
      if (converged && d > 0.0) out(x, y) = d;
    }
  }
  return out;
}

Grid<double> predict_new_area(const Grid<double>& A, const DepthImage& Z_cur, const Mask& new_area,
                              const OcclusionParams& params) {
  if (!A.same_shape(Z_cur) || !A.same_shape(new_area)) throw ConfigError("predict_new_area: grid dimensions differ");
  const int w = A.width();
  const int h = A.height();
  Grid<double> out = A;

  // known: A was computed from an occlusion measurement and depth is valid.
  Mask known(w, h, 0);
  Mask pending(w, h, 0);
  Mask existing_object(w, h, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool depth_ok = Z_cur[i] > 0.0;
    known[i] = !new_area[i] && depth_ok;
    pending[i] = new_area[i] && depth_ok;
    existing_object[i] = known[i] && A[i] > params.tau_alpha(Z_cur[i]);
  }

  const double sign = params.new_area_gradient == NewAreaGradient::kDepthConsistent ? -1.0 : 1.0;
  Mask predicted(w, h, 0);
  std::vector<std::pair<int, int>> frontier;
  std::vector<double> values;
  for (;;) {
    frontier.clear();
    values.clear();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!pending(x, y)) continue;
        double sum = 0.0;
        int n = 0;
        for_each_neighbor(x, y, w, h, Connectivity::kFour, [&](int nx, int ny) {
          if (!known(nx, ny)) return;
          sum += out(nx, ny) + sign * (Z_cur(x, y) - Z_cur(nx, ny));
          ++n;
        });
        if (n > 0) {
          frontier.emplace_back(x, y);
          values.push_back(sum / n);
        }
      }
    }
    if (frontier.empty()) break;
    // Values of one sweep only depend on earlier sweeps.
    for (std::size_t k = 0; k < frontier.size(); ++k) {
      const auto [x, y] = frontier[k];
      out(x, y) = values[k];
      pending(x, y) = 0;
      known(x, y) = 1;
      predicted(x, y) = 1;
    }
  }

  Mask positive(w, h, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    positive[i] = predicted[i] && out[i] > params.tau_alpha(Z_cur[i]);
  }
  const Components cc = label_components(positive, params.connectivity);
  if (cc.count() == 0) return out;
  std::vector<char> anchored(cc.count(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int label = cc.labels(x, y);
      if (label == 0 || anchored[label - 1]) continue;
      for_each_neighbor(x, y, w, h, params.connectivity, [&](int nx, int ny) {
        if (existing_object(nx, ny)) anchored[label - 1] = 1;
      });
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int label = cc.labels[i];
    if (label > 0 && !anchored[label - 1]) out[i] = 0.0;
  }
  return out;
}

AccumulationState AccumulationState::initial(const IntensityImage& I, const DepthImage& Z) {
  if (!I.same_shape(Z)) throw ConfigError("intensity and depth dimensions differ");
  AccumulationState s;
  s.A = Grid<double>(Z.width(), Z.height(), 0.0);
  s.B = Mask(Z.width(), Z.height(), 1);
  s.Z_prev = Z;
  s.I_prev = I;
  s.frame_index = 0;
  return s;
}

Mask step(AccumulationState& state, const IntensityImage& I_cur, const DepthImage& Z_cur, const Twist& xi,
          const CameraIntrinsics& K, const OcclusionParams& params, StepDiagnostics* diagnostics) {
  if (!I_cur.same_shape(Z_cur)) throw ConfigError("intensity and depth dimensions differ");
  DepthImage Z = compensate_depth(Z_cur, state.Z_prev, xi, K);
  OcclusionMap om = occlusion_map(state.Z_prev, Z, xi, K);
  Grid<double> A = accumulate(state.A, om);
  Grid<double> predicted = params.predict_new_area ? predict_new_area(A, Z, om.new_area, params) : A;
  Grid<double> truncated = truncate(predicted, om, Z, params);
  Mask B = background_mask(truncated, Z, params);

  Mask objects = object_mask(B);
  if (diagnostics) {
    diagnostics->occlusion = std::move(om);
    diagnostics->accumulated = std::move(A);
    diagnostics->predicted = std::move(predicted);
  }
  state.A = std::move(truncated);
  state.B = std::move(B);
  state.Z_prev = std::move(Z);
  state.I_prev = I_cur;
  ++state.frame_index;
  return objects;
}

OcclusionDetector::OcclusionDetector(const CameraIntrinsics& K, const OcclusionParams& params)
    : K_(K), params_(params) {
  K_.validate();
  params_.validate();
}

Mask OcclusionDetector::initialize(const IntensityImage& I, const DepthImage& Z) {
  if (Z.width() != K_.width || Z.height() != K_.height) {
    throw ConfigError("frame dimensions do not match the camera");
  }
  state_ = AccumulationState::initial(I, Z);
  return object_mask(state_->B);
}

Mask OcclusionDetector::process(const IntensityImage& I, const DepthImage& Z, const Twist& xi,
                                StepDiagnostics* diagnostics) {
  if (!state_) return initialize(I, Z);
  return step(*state_, I, Z, xi, K_, params_, diagnostics);
}

const AccumulationState& OcclusionDetector::state() const {
  if (!state_) throw ConfigError("detector has not been initialized");
  return *state_;
}

}  // namespace occdvo
