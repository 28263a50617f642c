#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "occdvo/dataset_io.hpp"
#include "occdvo/occlusion.hpp"
#include "occdvo/synth.hpp"

using namespace occdvo;
namespace fs = std::filesystem;

namespace {

SceneSpec plane_scene() {
  SceneSpec s;
  s.name = "plane";
  s.intrinsics = CameraIntrinsics::kinect_scaled(80, 60);
  s.frames = 2;
  s.camera = {RigidTransform::identity(), RigidTransform::translation({0, 0, 0.1})};
  SceneObject wall;
  wall.name = "wall";
  wall.kind = ShapeKind::kPlane;
  wall.size = {10, 10, 0};
  wall.trajectory = {RigidTransform::translation({0, 0, 2})};
  s.objects.push_back(wall);
  return s;
}

std::size_t count(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.data()) n += v != 0;
  return n;
}

}  // namespace

TEST_CASE("plane facing the camera renders constant depth") {
  const SceneSpec s = plane_scene();
  const SynthFrame f0 = render_frame(s, 0);
  for (double d : f0.depth.data()) CHECK(d == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(count(f0.gt_mask) == 0);
  const SynthFrame f1 = render_frame(s, 1);
  for (double d : f1.depth.data()) CHECK(d == doctest::Approx(1.9).epsilon(1e-12));
  f0.intensity.validate();
}

TEST_CASE("box in front of the plane covers exactly its projection") {
  SceneSpec s = plane_scene();
  s.frames = 1;
  s.camera = {RigidTransform::identity()};
  const CameraIntrinsics& K = s.intrinsics;
  // Front face at 1.5 m spanning 20 x 20 px.
  const double half = 10.0 * 1.5 / K.fx;
  SceneObject box;
  box.name = "box";
  box.kind = ShapeKind::kBox;
  box.moving = true;
  box.size = {half, half * K.fx / K.fy, 0.05};
  box.trajectory = {RigidTransform::translation({0, 0, 1.55})};
  s.objects.push_back(box);
  const SynthFrame f = render_frame(s, 0);
  Mask expected(K.width, K.height, 0);
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const double X = (x - K.cx) / K.fx * 1.5, Y = (y - K.cy) / K.fy * 1.5;
      if (std::abs(X) < box.size.x() && std::abs(Y) < box.size.y()) expected(x, y) = 1;
    }
  }
  CHECK(f.gt_mask == expected);
  CHECK(count(expected) == 400);
  const DepthImage wall_only = render_frame(plane_scene(), 0).depth;
  const OcclusionMap om = occlusion_map(wall_only, f.depth, Twist(), K);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i]) CHECK(om.dz[i] == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("camera inside an object is degenerate") {
  SceneSpec s = plane_scene();
  SceneObject ball;
  ball.name = "ball";
  ball.kind = ShapeKind::kSphere;
  ball.size = {0.5, 0, 0};
  ball.trajectory = {RigidTransform::identity()};
  s.objects.push_back(ball);
  CHECK_THROWS_WITH_AS((void)render_frame(s, 0), doctest::Contains("degenerate viewpoint"), DegenerateError);
}

TEST_CASE("scene validation") {
  SceneSpec s = plane_scene();
  s.objects[0].trajectory.assign(3, RigidTransform::identity());
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS((void)make_suite("nope"), ConfigError);
}

TEST_CASE("supersampling smooths intensity only") {
  SceneSpec s = plane_scene();
  const auto a = render_frame(s, 1);
  s.supersample = 3;
  const auto b = render_frame(s, 1);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.intensity.size(); ++i) {
    CHECK(a.depth[i] == b.depth[i]);
    CHECK(a.gt_mask[i] == b.gt_mask[i]);
    CHECK(b.intensity[i] >= 0.0);
    CHECK(b.intensity[i] <= 1.0);
    diff += std::abs(a.intensity[i] - b.intensity[i]);
  }
  CHECK(diff > 0.0);
  s.supersample = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("texture is deterministic and bounded") {
  Texture t;
  const Eigen::Vector3d p(0.3, -0.7, 1.1);
  CHECK(texture_value(t, p) == texture_value(t, p));
  for (int i = 0; i < 100; ++i) {
    const double v = texture_value(t, Eigen::Vector3d(i * 0.013, i * 0.007, 0));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("suite catalog") {
  const auto names = suite_names();
  CHECK(names.size() == 5);
  for (const auto& s : standard_suites(64, 48)) {
    CHECK_NOTHROW(s.validate());
    CHECK(s.intrinsics.width == 64);
  }
  CHECK(count(render_frame(make_suite("static_box", 80, 60), 0).gt_mask) == 0);
}

TEST_CASE("dominant object covers most of the view at its peak") {
  const SceneSpec s = make_suite("dominant_object", 80, 60);
  double peak = 0.0;
  for (int i = 0; i < s.frames; i += 3) {
    const Mask m = render_frame(s, i).gt_mask;
    peak = std::max(peak, double(count(m)) / double(m.size()));
  }
  CHECK(peak > 0.5);
}

TEST_CASE("panning suite reveals new area") {
  const SceneSpec s = make_suite("dynamic_pan", 80, 60);
  const SynthFrame a = render_frame(s, 10), b = render_frame(s, 11);
  const OcclusionMap om = occlusion_map(a.depth, b.depth, log_se3(a.pose.inverse() * b.pose), s.intrinsics);
  CHECK(om.new_area_count() > 0);
}

TEST_CASE("depth noise is seeded") {
  SceneSpec s = make_suite("static_box", 64, 48);
  s.noise.sigma_coeff = 0.003;
  s.noise.dropout = 0.05;
  s.seed = 9;
  const DepthImage a = render_frame(s, 3).depth, b = render_frame(s, 3).depth;
  CHECK(a == b);
  s.seed = 10;
  CHECK_FALSE(render_frame(s, 3).depth == a);
  CHECK(a.valid_count() < a.size());
}

TEST_CASE("TUM export loads back") {
  const fs::path dir = fs::temp_directory_path() / "occdvo_export_test";
  fs::remove_all(dir);
  SceneSpec s = make_suite("toss", 64, 48);
  s.frames = 4;
  s.eval_start = 0;
  for (auto& o : s.objects) {
    if (o.trajectory.size() > 1) o.trajectory.resize(4);
  }
  export_tum(s, dir);
  const Sequence seq = load_sequence(dir);
  REQUIRE(seq.frames.size() == 4);
  CHECK(seq.frames[2].gt_pose.has_value());
  const DepthImage d = read_depth_png(seq.frames[1].depth_path);
  const SynthFrame f = render_frame(s, 1);
  CHECK(d(10, 10) == doctest::Approx(f.depth(10, 10)).epsilon(1e-3));
  CHECK(read_intrinsics(dir / "intrinsics.txt").fx == doctest::Approx(s.intrinsics.fx));
}
