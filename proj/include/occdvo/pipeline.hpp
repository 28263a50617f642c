#pragma once

// Frame loop joining odometry and occlusion detection, with optional
// evaluation and on-disk artifacts.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "occdvo/dataset_io.hpp"
#include "occdvo/eval.hpp"
#include "occdvo/occlusion.hpp"
#include "occdvo/odometry.hpp"

namespace occdvo {

enum class PoseMode { kEstimate, kExternal, kGroundTruth };

[[nodiscard]] std::string to_string(PoseMode m);
/// "estimate", "external" (or "external-file") and "ground-truth".
[[nodiscard]] PoseMode parse_pose_mode(const std::string& s);

struct RunConfig {
  // Input: exactly one of input_dir (TUM layout) and suite.
  std::filesystem::path input_dir;
  std::string suite;
  int synth_width = 320;
  int synth_height = 240;

  PoseMode pose_mode = PoseMode::kEstimate;
  std::filesystem::path ext_trajectory;
  std::filesystem::path intrinsics_file;  // TUM input; defaults to <input>/intrinsics.txt or Kinect values
  double depth_scale = kTumDepthScale;
  double assoc_tolerance = kDefaultAssocTolerance;

  OcclusionParams occlusion;
  DvoParams dvo;
  bool mask_odometry = true;  // false: B = 1 for odometry (robust estimator alone)
  // Second odometry pass that also drops current pixels detected as moving by
  // a trial detector step with the first estimate.
  bool refine_pose = true;

  std::filesystem::path out_dir;  // empty: nothing written
  std::uint64_t seed = 0;         // synthetic depth noise
  double noise_sigma = 0.0;       // synthetic depth noise coefficient
  double noise_dropout = 0.0;

  bool eval_f1 = true;
  bool eval_rpe = true;
  int rpe_delta = -1;   // -1: 30 for synthetic suites, 150 otherwise
  int eval_start = -1;  // -1: the suite's default, 0 for TUM input
  std::filesystem::path eval_gt_masks;

  int max_frames = 0;  // 0: all

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
  [[nodiscard]] int resolved_rpe_delta() const;
};

/// key=value text listing every field of the config plus version metadata.
[[nodiscard]] std::string manifest_text(const RunConfig& config);
void write_manifest(const std::filesystem::path& path, const RunConfig& config);
/// Inverse of manifest_text. Unknown keys are rejected.
[[nodiscard]] RunConfig read_manifest(const std::filesystem::path& path);

struct RunResult {
  std::vector<double> timestamps;
  Trajectory trajectory;  // world from camera
  std::vector<Twist> relative;  // per frame; frame 0 holds the zero twist
  std::vector<Mask> object_masks;  // 1 = moving object
  std::optional<SegmentationScore> segmentation;
  std::optional<RpeScore> rpe;
  int eval_start = 0;
};

/// Error raised by run(); names the frame and stage that failed.
class RunError : public Error {
 public:
  RunError(const std::string& what, bool config) : Error(what), config_(config) {}
  /// True when the failure stems from bad input configuration.
  [[nodiscard]] bool config_error() const { return config_; }

 private:
  bool config_;
};

/// Called after each frame with its index, the object mask and the relative
/// twist used.
using FrameCallback = std::function<void(int, const Mask&, const Twist&)>;

/// Runs the pipeline. Per frame: obtain the relative twist (estimated with
/// the previous background map, or from a trajectory), then advance the
/// occlusion detector. Writes masks/, trajectory.txt, f1.csv, rpe.csv and
/// manifest.txt when out_dir is set.
[[nodiscard]] RunResult run(const RunConfig& config, const FrameCallback& on_frame = {});

}  // namespace occdvo
