#pragma once

// TUM RGB-D layout: rgb.txt / depth.txt index files ("timestamp path" lines,
// '#' comments), 16-bit depth PNGs in counts per meter, 8-bit color PNGs and
// "timestamp tx ty tz qx qy qz qw" trajectories in world-from-camera form.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "occdvo/geometry.hpp"
#include "occdvo/image.hpp"

namespace occdvo {

inline constexpr double kTumDepthScale = 5000.0;
inline constexpr double kDefaultAssocTolerance = 0.02;

struct TimedPose {
  double timestamp = 0.0;
  RigidTransform pose;  // world from camera
};

struct Trajectory {
  std::vector<TimedPose> poses;

  [[nodiscard]] std::size_t size() const { return poses.size(); }
  [[nodiscard]] bool empty() const { return poses.empty(); }
  /// Throws DataError unless timestamps strictly increase and every pose is
  /// a valid rigid transform.
  void validate() const;
};

struct FrameRecord {
  double timestamp = 0.0;        // rgb timestamp
  double depth_timestamp = 0.0;
  std::filesystem::path rgb_path;
  std::filesystem::path depth_path;
  std::optional<RigidTransform> gt_pose;
};

struct Sequence {
  std::vector<FrameRecord> frames;
  std::size_t dropped_rgb = 0;
  std::size_t dropped_depth = 0;
};

struct IndexEntry {
  double timestamp = 0.0;
  std::string path;
};

/// Reads a "timestamp path" index file.
[[nodiscard]] std::vector<IndexEntry> read_index_file(const std::filesystem::path& path);

/// Pairs (i, j) of a[i] and b[j] with |a - b| <= tolerance, chosen greedily by
/// increasing time difference; each entry is used at most once. Sorted by i.
[[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> associate(const std::vector<double>& a,
                                                                        const std::vector<double>& b,
                                                                        double tolerance);

/// Loads rgb.txt / depth.txt (and groundtruth.txt when present) from root.
/// Throws DataError("empty sequence") for an empty directory or when nothing
/// associates, IoError when an index file is missing.
[[nodiscard]] Sequence load_sequence(const std::filesystem::path& root,
                                     double assoc_tolerance = kDefaultAssocTolerance);

/// Raw 16-bit single-channel PNG I/O.
[[nodiscard]] Grid<std::uint16_t> read_png16(const std::filesystem::path& path);
void write_png16(const std::filesystem::path& path, const Grid<std::uint16_t>& counts);

/// meters = count / depth_scale; count 0 is the invalid sentinel.
[[nodiscard]] DepthImage decode_depth(const Grid<std::uint16_t>& counts, double depth_scale = kTumDepthScale);
/// Rounds to the nearest count; depths beyond the 16-bit range become invalid.
[[nodiscard]] Grid<std::uint16_t> encode_depth(const DepthImage& depth, double depth_scale = kTumDepthScale);

[[nodiscard]] DepthImage read_depth_png(const std::filesystem::path& path, double depth_scale = kTumDepthScale);
void write_depth_png(const std::filesystem::path& path, const DepthImage& depth,
                     double depth_scale = kTumDepthScale);

/// 8-bit gray, gray+alpha, RGB or RGBA PNG, normalized to [0, 1].
[[nodiscard]] RgbImage read_color_png(const std::filesystem::path& path);
void write_color_png(const std::filesystem::path& path, const RgbImage& rgb);
void write_gray_png(const std::filesystem::path& path, const IntensityImage& gray);

/// 8-bit mask PNG; any nonzero value reads as 1.
[[nodiscard]] Mask read_mask_png(const std::filesystem::path& path);
/// Writes 255 wherever the mask is nonzero, 0 elsewhere.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

/// Quaternions are normalized on load; a norm further than 1e-3 from 1 is
/// rejected. Errors name the offending line.
[[nodiscard]] Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);

/// Pose at time t, interpolated between the bracketing samples (linear in
/// translation, slerp in rotation). Throws DataError("no pose coverage") if
/// the nearest sample is further than max_gap.
[[nodiscard]] RigidTransform pose_lookup(const Trajectory& traj, double t, double max_gap);

/// Six-decimal timestamp text used for per-frame file names.
[[nodiscard]] std::string format_timestamp(double t);

/// Plain-text calibration: "fx fy cx cy width height" ('#' comments allowed).
[[nodiscard]] CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& K);

}  // namespace occdvo
