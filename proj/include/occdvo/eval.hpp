#pragma once

// Segmentation F1 and relative pose error.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "occdvo/dataset_io.hpp"
#include "occdvo/image.hpp"

namespace occdvo {

struct FrameScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  bool scored = true;  // false when both masks are empty
};

/// Nonzero pixels are objects. Empty denominators: both masks empty gives
/// (1, 1, 1) and an unscored frame; an empty prediction or an empty ground
/// truth against a nonempty counterpart gives F1 = 0 (the undefined ratio is
/// reported as 0). Throws ConfigError on a dimension mismatch.
[[nodiscard]] FrameScore f1_frame(const Mask& pred, const Mask& gt);

struct SegmentationScore {
  std::vector<FrameScore> frames;
  double mean_f1 = 0.0;  // NaN when no frame is scored
  int scored_frames = 0;
};

/// Mean F1 over scored frames. Throws ConfigError
/// for an empty list.
[[nodiscard]] SegmentationScore f1_sequence(const std::vector<FrameScore>& frames);
[[nodiscard]] SegmentationScore f1_sequence(const std::vector<Mask>& pred, const std::vector<Mask>& gt);

struct RpePair {
  double timestamp = 0.0;  // start of the interval
  double translation = 0.0;  // meters
  double rotation_deg = 0.0;
};

struct RpeScore {
  int delta = 0;
  double translation_rmse = 0.0;
  double rotation_rmse_deg = 0.0;
  std::vector<RpePair> pairs;
};

/// E_i = (Q_i^-1 Q_{i+delta})^-1 (P_i^-1 P_{i+delta}) over index-aligned
/// poses, P estimated and Q ground truth. Throws DataError("insufficient
/// trajectory length") unless more than delta poses are given.
[[nodiscard]] RpeScore rpe(const std::vector<RigidTransform>& estimated, const std::vector<RigidTransform>& gt,
                           int delta, const std::vector<double>& timestamps = {});

/// Associates the trajectories by timestamp first; delta counts associated
/// frames.
[[nodiscard]] RpeScore rpe(const Trajectory& estimated, const Trajectory& gt, int delta,
                           double tolerance = kDefaultAssocTolerance);

/// "timestamp,precision,recall,f1,scored" rows and a final "mean" row.
void write_f1_csv(const std::filesystem::path& path, const std::vector<double>& timestamps,
                  const SegmentationScore& score);
/// "timestamp,translation_m,rotation_deg" rows and a final "rmse" row.
void write_rpe_csv(const std::filesystem::path& path, const RpeScore& score);

}  // namespace occdvo
