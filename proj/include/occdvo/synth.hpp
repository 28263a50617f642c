#pragma once

// Deterministic ray-cast RGB-D scenes with exact poses and object masks.
//
// Shapes carry a procedural texture defined in object-local coordinates, so
// a surface point has the same gray value from every viewpoint. Depth is the
// z component of the nearest hit in the camera frame.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "occdvo/dataset_io.hpp"
#include "occdvo/geometry.hpp"
#include "occdvo/image.hpp"

namespace occdvo {

/// Multi-octave value noise.
struct Texture {
  std::uint64_t seed = 1;
  double cell = 0.04;  // finest lattice spacing, meters
  int octaves = 3;
  double mean = 0.5;
  double amplitude = 0.45;
};

/// Gray value in [0, 1] at a point given in object coordinates.
[[nodiscard]] double texture_value(const Texture& tex, const Eigen::Vector3d& p);

enum class ShapeKind {
  kPlane,   // rectangle in the local z = 0 plane, half extents size.x(), size.y()
  kBox,     // half extents size
  kSphere,  // radius size.x()
};

struct SceneObject {
  std::string name;
  ShapeKind kind = ShapeKind::kBox;
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  Texture texture;
  bool moving = false;  // counted in the ground-truth mask
  // World from object, one entry per frame, or a single entry for a static shape.
  std::vector<RigidTransform> trajectory;

  [[nodiscard]] const RigidTransform& pose(int frame) const;
};

struct DepthNoise {
  double sigma_coeff = 0.0;  // sigma = sigma_coeff * Z^2, meters
  double dropout = 0.0;      // probability that a pixel is unmeasured
};

struct SceneSpec {
  std::string name;
  CameraIntrinsics intrinsics;
  int frames = 1;
  double frame_rate = 30.0;
  // World from camera, one entry per frame, or a single entry for a fixed camera.
  std::vector<RigidTransform> camera;
  std::vector<SceneObject> objects;
  DepthNoise noise;
  std::uint64_t seed = 0;
  // Rays per pixel side averaged into the intensity (anti-aliasing).
  int supersample = 1;
  // First frame scored by segmentation metrics: the moving objects have
  // entered the view far enough to have been observed occluding something.
  int eval_start = 0;

  /// Throws ConfigError on missing or inconsistent trajectories, non-positive
  /// extents or invalid intrinsics.
  void validate() const;

  [[nodiscard]] double timestamp(int frame) const { return frame / frame_rate; }
  [[nodiscard]] const RigidTransform& camera_pose(int frame) const;
  [[nodiscard]] Trajectory camera_trajectory() const;
};

struct SynthFrame {
  double timestamp = 0.0;
  IntensityImage intensity;
  DepthImage depth;
  Mask gt_mask;         // 1 where the nearest hit is a moving object
  RigidTransform pose;  // world from camera

  [[nodiscard]] RgbdFrame rgbd() const { return {intensity, depth}; }
};

/// Renders one frame. Throws DegenerateError("degenerate viewpoint") when the
/// camera center lies inside a box or sphere.
[[nodiscard]] SynthFrame render_frame(const SceneSpec& spec, int frame);
[[nodiscard]] std::vector<SynthFrame> render(const SceneSpec& spec);

/// Names accepted by make_suite.
[[nodiscard]] std::vector<std::string> suite_names();

/// Builds a named scenario at the given resolution (Kinect-like field of
/// view). Throws ConfigError for an unknown name.
[[nodiscard]] SceneSpec make_suite(const std::string& name, int width = 320, int height = 240);
[[nodiscard]] std::vector<SceneSpec> standard_suites(int width = 320, int height = 240);

/// Writes the rendered sequence in TUM layout: rgb/, depth/, rgb.txt,
/// depth.txt, groundtruth.txt, intrinsics.txt and gt_masks/.
void export_tum(const SceneSpec& spec, const std::filesystem::path& dir, double depth_scale = kTumDepthScale);

}  // namespace occdvo
