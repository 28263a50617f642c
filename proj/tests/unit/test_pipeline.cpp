#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "occdvo/pipeline.hpp"
#include "occdvo/synth.hpp"

using namespace occdvo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("occdvo_run_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_run(const std::string& suite) {
  RunConfig c;
  c.suite = suite;
  c.synth_width = 160;
  c.synth_height = 120;
  c.rpe_delta = 10;
  return c;
}

}  // namespace

TEST_CASE("pose mode names") {
  CHECK(parse_pose_mode("estimate") == PoseMode::kEstimate);
  CHECK(parse_pose_mode("external-file") == PoseMode::kExternal);
  CHECK(parse_pose_mode("ground-truth") == PoseMode::kGroundTruth);
  CHECK(to_string(PoseMode::kExternal) == "external");
  CHECK_THROWS_AS((void)parse_pose_mode("vicon"), ConfigError);
}

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.suite = "static_box";
  CHECK_NOTHROW(c.validate());
  c.input_dir = "/tmp";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.input_dir.clear();
  c.pose_mode = PoseMode::kExternal;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.pose_mode = PoseMode::kEstimate;
  CHECK(c.resolved_rpe_delta() == 30);
  c.suite.clear();
  c.input_dir = "/tmp";
  CHECK(c.resolved_rpe_delta() == 150);
}

TEST_CASE("manifest round trip") {
  RunConfig c = small_run("toss");
  c.occlusion.alpha = 0.031;
  c.occlusion.new_area_gradient = NewAreaGradient::kAdditive;
  c.dvo.gamma = 0.123456789012345;
  c.seed = 77;
  c.refine_pose = false;
  const fs::path dir = scratch("manifest");
  fs::create_directories(dir);
  write_manifest(dir / "m.txt", c);
  const RunConfig back = read_manifest(dir / "m.txt");
  CHECK(manifest_text(back) == manifest_text(c));
  CHECK(back.dvo.gamma == c.dvo.gamma);
  std::ofstream(dir / "bad.txt") << "colour=blue\n";
  CHECK_THROWS_WITH_AS((void)read_manifest(dir / "bad.txt"), doctest::Contains("unknown manifest key"), ConfigError);
  std::ofstream(dir / "junk.txt") << "no equals sign\n";
  CHECK_THROWS_AS((void)read_manifest(dir / "junk.txt"), FormatError);
}

TEST_CASE("empty input directory fails with an empty sequence") {
  const fs::path dir = scratch("empty");
  fs::create_directories(dir);
  RunConfig c;
  c.input_dir = dir;
  try {
    (void)run(c);
    FAIL("expected an error");
  } catch (const RunError& e) {
    CHECK(std::string(e.what()).find("empty sequence") != std::string::npos);
  }
}

TEST_CASE("static box run writes its artifacts") {
  RunConfig c = small_run("static_box");
  c.out_dir = scratch("static_box");
  const RunResult r = run(c);
  CHECK(r.timestamps.size() == 60);
  REQUIRE(r.segmentation.has_value());
  CHECK(r.segmentation->mean_f1 >= 0.90);
  REQUIRE(r.rpe.has_value());
  CHECK(r.rpe->translation_rmse <= 0.01);
  for (const char* f : {"trajectory.txt", "f1.csv", "rpe.csv", "manifest.txt"}) CHECK(fs::exists(c.out_dir / f));
  CHECK(fs::exists(c.out_dir / "masks" / (format_timestamp(r.timestamps[5]) + ".png")));
  CHECK(read_trajectory(c.out_dir / "trajectory.txt").size() == 60);
}

TEST_CASE("runs are reproducible and manifests replay them") {
  RunConfig c = small_run("toss");
  c.max_frames = 12;
  c.noise_sigma = 0.002;
  c.seed = 5;
  const fs::path a = scratch("repro_a");
  c.out_dir = a;
  (void)run(c);
  c.out_dir = scratch("repro_b");
  (void)run(c);
  RunConfig replay = read_manifest(a / "manifest.txt");
  replay.out_dir = scratch("repro_c");
  (void)run(replay);
  for (const fs::path& other : {c.out_dir, replay.out_dir}) {
    CHECK(slurp(a / "trajectory.txt") == slurp(other / "trajectory.txt"));
    for (const auto& e : fs::directory_iterator(a / "masks")) {
      CHECK(slurp(e.path()) == slurp(other / "masks" / e.path().filename()));
    }
  }
}

TEST_CASE("external poses are never markedly worse than estimated ones") {
  RunConfig c = small_run("static_box");
  const RunResult est = run(c);
  const fs::path dir = scratch("ext");
  fs::create_directories(dir);
  write_trajectory(make_suite("static_box", 160, 120).camera_trajectory(), dir / "gt.txt");
  c.pose_mode = PoseMode::kExternal;
  c.ext_trajectory = dir / "gt.txt";
  const RunResult ext = run(c);
  CHECK(ext.segmentation->mean_f1 >= est.segmentation->mean_f1 - 0.02);
  CHECK(ext.rpe->translation_rmse < 1e-9);
}

TEST_CASE("TUM directory input") {
  const fs::path dir = scratch("tum");
  SceneSpec s = make_suite("static_box", 80, 60);
  export_tum(s, dir);
  RunConfig c;
  c.input_dir = dir;
  c.max_frames = 20;
  c.rpe_delta = 5;
  c.eval_gt_masks = dir / "gt_masks";
  c.pose_mode = PoseMode::kGroundTruth;
  const RunResult r = run(c);
  CHECK(r.timestamps.size() == 20);
  CHECK(r.segmentation.has_value());
  CHECK(r.rpe->translation_rmse < 1e-3);
}

TEST_CASE("errors name the frame and stage") {
  const fs::path dir = scratch("broken");
  SceneSpec s = make_suite("static_box", 64, 48);
  export_tum(s, dir);
  const Sequence seq = load_sequence(dir);
  fs::remove(seq.frames[3].depth_path);
  RunConfig c;
  c.input_dir = dir;
  try {
    (void)run(c);
    FAIL("expected an error");
  } catch (const RunError& e) {
    CHECK_FALSE(e.config_error());
    CHECK(std::string(e.what()).find("frame 3") != std::string::npos);
  }
}
