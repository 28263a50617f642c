#include "occdvo/eval.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

namespace occdvo {

FrameScore f1_frame(const Mask& pred, const Mask& gt) {
  if (!pred.same_shape(gt)) throw ConfigError("prediction and ground-truth masks differ in size");
  FrameScore s;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool g = gt[i] != 0;
    s.tp += p && g;
    s.fp += p && !g;
    s.fn += !p && g;
  }
  const std::int64_t predicted = s.tp + s.fp;
  const std::int64_t actual = s.tp + s.fn;
  if (predicted == 0 && actual == 0) {
    s.precision = s.recall = s.f1 = 1.0;
    s.scored = false;
    return s;
  }
  s.precision = predicted > 0 ? static_cast<double>(s.tp) / static_cast<double>(predicted) : 0.0;
  s.recall = actual > 0 ? static_cast<double>(s.tp) / static_cast<double>(actual) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

SegmentationScore f1_sequence(const std::vector<FrameScore>& frames) {
  if (frames.empty()) throw ConfigError("f1_sequence needs at least one frame");
  SegmentationScore out;
  out.frames = frames;
  double sum = 0.0;
  for (const auto& f : frames) {
    if (!f.scored) continue;
    sum += f.f1;
    ++out.scored_frames;
  }
  out.mean_f1 = out.scored_frames > 0 ? sum / out.scored_frames : std::numeric_limits<double>::quiet_NaN();
  return out;
}

SegmentationScore f1_sequence(const std::vector<Mask>& pred, const std::vector<Mask>& gt) {
  if (pred.size() != gt.size()) throw ConfigError("prediction and ground-truth sequences differ in length");
  std::vector<FrameScore> frames;
  frames.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) frames.push_back(f1_frame(pred[i], gt[i]));
  return f1_sequence(frames);
}

RpeScore rpe(const std::vector<RigidTransform>& estimated, const std::vector<RigidTransform>& gt, int delta,
             const std::vector<double>& timestamps) {
  if (delta < 0) throw ConfigError("rpe delta must be non-negative");
  if (estimated.size() != gt.size()) throw ConfigError("trajectories differ in length");
  if (!timestamps.empty() && timestamps.size() != gt.size()) throw ConfigError("timestamp count mismatch");
  const auto n = static_cast<int>(gt.size());
  if (n <= delta) {
    throw DataError("insufficient trajectory length: " + std::to_string(n) + " poses for delta " +
                    std::to_string(delta));
  }
  RpeScore out;
  out.delta = delta;
  double st = 0.0;
  double sr = 0.0;
  for (int i = 0; i + delta < n; ++i) {
    const RigidTransform q = gt[i].inverse() * gt[i + delta];
    const RigidTransform p = estimated[i].inverse() * estimated[i + delta];
    const RigidTransform e = q.inverse() * p;
    RpePair pair;
    pair.timestamp = timestamps.empty() ? static_cast<double>(i) : timestamps[i];
    pair.translation = e.t.norm();
    pair.rotation_deg = rotation_angle(e.R) * 180.0 / std::numbers::pi;
    st += pair.translation * pair.translation;
    sr += pair.rotation_deg * pair.rotation_deg;
    out.pairs.push_back(pair);
  }
  const auto m = static_cast<double>(out.pairs.size());
  out.translation_rmse = std::sqrt(st / m);
  out.rotation_rmse_deg = std::sqrt(sr / m);
  return out;
}

RpeScore rpe(const Trajectory& estimated, const Trajectory& gt, int delta, double tolerance) {
  std::vector<double> te, tg;
  for (const auto& p : estimated.poses) te.push_back(p.timestamp);
  for (const auto& p : gt.poses) tg.push_back(p.timestamp);
  std::vector<RigidTransform> P, Q;
  std::vector<double> stamps;
  for (const auto& [i, j] : associate(te, tg, tolerance)) {
    P.push_back(estimated.poses[i].pose);
    Q.push_back(gt.poses[j].pose);
    stamps.push_back(te[i]);
  }
  return rpe(P, Q, delta, stamps);
}

void write_f1_csv(const std::filesystem::path& path, const std::vector<double>& timestamps,
                  const SegmentationScore& score) {
  if (timestamps.size() != score.frames.size()) throw ConfigError("timestamp count mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "timestamp,precision,recall,f1,scored\n" << std::setprecision(10);
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    const auto& f = score.frames[i];
    out << format_timestamp(timestamps[i]) << ',' << f.precision << ',' << f.recall << ',' << f.f1 << ','
        << (f.scored ? 1 : 0) << '\n';
  }
  out << "mean,,," << score.mean_f1 << ',' << score.scored_frames << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_rpe_csv(const std::filesystem::path& path, const RpeScore& score) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "timestamp,translation_m,rotation_deg\n" << std::setprecision(10);
  for (const auto& p : score.pairs) {
    out << format_timestamp(p.timestamp) << ',' << p.translation << ',' << p.rotation_deg << '\n';
  }
  out << "rmse," << score.translation_rmse << ',' << score.rotation_rmse_deg << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace occdvo
