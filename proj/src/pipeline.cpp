#include "occdvo/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Core>
#include <png.h>

#include "occdvo/synth.hpp"

namespace occdvo {

namespace fs = std::filesystem;

std::string to_string(PoseMode m) {
  switch (m) {
    case PoseMode::kEstimate:
      return "estimate";
    case PoseMode::kExternal:
      return "external";
    case PoseMode::kGroundTruth:
      return "ground-truth";
  }
  return "estimate";
}

PoseMode parse_pose_mode(const std::string& s) {
  if (s == "estimate") return PoseMode::kEstimate;
  if (s == "external" || s == "external-file") return PoseMode::kExternal;
  if (s == "ground-truth" || s == "gt") return PoseMode::kGroundTruth;
  throw ConfigError("unknown pose mode '" + s + "' (expected estimate, external or ground-truth)");
}

void RunConfig::validate() const {
  if (input_dir.empty() == suite.empty()) throw ConfigError("exactly one of an input directory and a suite is required");
  if (!suite.empty() && (synth_width < 16 || synth_height < 16)) throw ConfigError("synthetic resolution too small");
  if (pose_mode == PoseMode::kExternal && ext_trajectory.empty()) {
    throw ConfigError("external pose mode needs a trajectory file");
  }
  if (pose_mode != PoseMode::kExternal && !ext_trajectory.empty()) {
    throw ConfigError("an external trajectory is only used in external pose mode");
  }
  if (!(depth_scale > 0.0)) throw ConfigError("depth_scale must be positive");
  if (!(assoc_tolerance > 0.0)) throw ConfigError("association tolerance must be positive");
  if (rpe_delta < -1) throw ConfigError("rpe delta must be non-negative");
  if (eval_start < -1) throw ConfigError("eval start must be non-negative");
  if (max_frames < 0) throw ConfigError("max_frames must be non-negative");
  if (noise_sigma < 0.0 || noise_dropout < 0.0 || noise_dropout >= 1.0) throw ConfigError("invalid noise settings");
  occlusion.validate();
  dvo.validate();
}

int RunConfig::resolved_rpe_delta() const {
  if (rpe_delta >= 0) return rpe_delta;
  return suite.empty() ? 150 : 30;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

std::string connectivity_name(Connectivity c) { return c == Connectivity::kFour ? "4" : "8"; }

std::string gradient_name(NewAreaGradient g) {
  return g == NewAreaGradient::kDepthConsistent ? "depth-consistent" : "additive";
}

}  // namespace

std::string manifest_text(const RunConfig& c) {
  std::ostringstream os;
  os << "# occdvo run manifest\n";
  os << "version=" << OCCDVO_VERSION << "\n";
  os << "eigen=" << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << "\n";
  os << "libpng=" << PNG_LIBPNG_VER_STRING << "\n";
  os << "input=" << c.input_dir.string() << "\n";
  os << "suite=" << c.suite << "\n";
  os << "synth_width=" << c.synth_width << "\n";
  os << "synth_height=" << c.synth_height << "\n";
  os << "pose_mode=" << to_string(c.pose_mode) << "\n";
  os << "ext_trajectory=" << c.ext_trajectory.string() << "\n";
  os << "intrinsics=" << c.intrinsics_file.string() << "\n";
  os << "depth_scale=" << fmt(c.depth_scale) << "\n";
  os << "assoc_tolerance=" << fmt(c.assoc_tolerance) << "\n";
  os << "alpha=" << fmt(c.occlusion.alpha) << "\n";
  os << "beta=" << fmt(c.occlusion.beta) << "\n";
  os << "min_component=" << c.occlusion.min_component_px << "\n";
  os << "border_margin=" << c.occlusion.border_margin_px << "\n";
  os << "connectivity=" << connectivity_name(c.occlusion.connectivity) << "\n";
  os << "predict_new_area=" << (c.occlusion.predict_new_area ? 1 : 0) << "\n";
  os << "new_area_gradient=" << gradient_name(c.occlusion.new_area_gradient) << "\n";
  os << "kI=" << fmt(c.dvo.k_I) << "\n";
  os << "kZ=" << fmt(c.dvo.k_Z) << "\n";
  os << "gamma=" << fmt(c.dvo.gamma) << "\n";
  os << "pyramid_levels=" << c.dvo.pyramid_levels << "\n";
  os << "max_iterations=" << c.dvo.max_iterations << "\n";
  os << "lm_lambda_init=" << fmt(c.dvo.lm_lambda_init) << "\n";
  os << "lm_lambda_up=" << fmt(c.dvo.lm_lambda_up) << "\n";
  os << "lm_lambda_down=" << fmt(c.dvo.lm_lambda_down) << "\n";
  os << "convergence_eps=" << fmt(c.dvo.convergence_eps) << "\n";
  os << "min_pixels=" << c.dvo.min_pixels << "\n";
  os << "mask_odometry=" << (c.mask_odometry ? 1 : 0) << "\n";
  os << "refine_pose=" << (c.refine_pose ? 1 : 0) << "\n";
  os << "seed=" << c.seed << "\n";
  os << "noise_sigma=" << fmt(c.noise_sigma) << "\n";
  os << "noise_dropout=" << fmt(c.noise_dropout) << "\n";
  os << "eval_f1=" << (c.eval_f1 ? 1 : 0) << "\n";
  os << "eval_rpe=" << (c.eval_rpe ? 1 : 0) << "\n";
  os << "rpe_delta=" << c.rpe_delta << "\n";
  os << "eval_start=" << c.eval_start << "\n";
  os << "eval_gt_masks=" << c.eval_gt_masks.string() << "\n";
  os << "max_frames=" << c.max_frames << "\n";
  return os.str();
}

void write_manifest(const fs::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << manifest_text(config);
  if (!out) throw IoError("failed writing " + path.string());
}

RunConfig read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  RunConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const auto num = [&] { return std::stod(value); };
      const auto integer = [&] { return std::stoi(value); };
      const auto flag = [&] { return value == "1" || value == "true"; };
      if (key == "version" || key == "eigen" || key == "libpng") continue;
      if (key == "input") c.input_dir = value;
      else if (key == "suite") c.suite = value;
      else if (key == "synth_width") c.synth_width = integer();
      else if (key == "synth_height") c.synth_height = integer();
      else if (key == "pose_mode") c.pose_mode = parse_pose_mode(value);
      else if (key == "ext_trajectory") c.ext_trajectory = value;
      else if (key == "intrinsics") c.intrinsics_file = value;
      else if (key == "depth_scale") c.depth_scale = num();
      else if (key == "assoc_tolerance") c.assoc_tolerance = num();
      else if (key == "alpha") c.occlusion.alpha = num();
      else if (key == "beta") c.occlusion.beta = num();
      else if (key == "min_component") c.occlusion.min_component_px = integer();
      else if (key == "border_margin") c.occlusion.border_margin_px = integer();
      else if (key == "connectivity") c.occlusion.connectivity = value == "8" ? Connectivity::kEight : Connectivity::kFour;
      else if (key == "predict_new_area") c.occlusion.predict_new_area = flag();
      else if (key == "new_area_gradient") {
        if (value == "additive") c.occlusion.new_area_gradient = NewAreaGradient::kAdditive;
        else if (value == "depth-consistent") c.occlusion.new_area_gradient = NewAreaGradient::kDepthConsistent;
        else throw ConfigError("unknown new_area_gradient '" + value + "'");
      }
      else if (key == "kI") c.dvo.k_I = num();
      else if (key == "kZ") c.dvo.k_Z = num();
      else if (key == "gamma") c.dvo.gamma = num();
      else if (key == "pyramid_levels") c.dvo.pyramid_levels = integer();
      else if (key == "max_iterations") c.dvo.max_iterations = integer();
      else if (key == "lm_lambda_init") c.dvo.lm_lambda_init = num();
      else if (key == "lm_lambda_up") c.dvo.lm_lambda_up = num();
      else if (key == "lm_lambda_down") c.dvo.lm_lambda_down = num();
      else if (key == "convergence_eps") c.dvo.convergence_eps = num();
      else if (key == "min_pixels") c.dvo.min_pixels = integer();
      else if (key == "mask_odometry") c.mask_odometry = flag();
      else if (key == "refine_pose") c.refine_pose = flag();
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "noise_sigma") c.noise_sigma = num();
      else if (key == "noise_dropout") c.noise_dropout = num();
      else if (key == "eval_f1") c.eval_f1 = flag();
      else if (key == "eval_rpe") c.eval_rpe = flag();
      else if (key == "rpe_delta") c.rpe_delta = integer();
      else if (key == "eval_start") c.eval_start = integer();
      else if (key == "eval_gt_masks") c.eval_gt_masks = value;
      else if (key == "max_frames") c.max_frames = integer();
      else throw ConfigError("unknown manifest key '" + key + "'");
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const std::exception&) {
      throw ConfigError(where + ": invalid value for '" + key + "'");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Frame sources

namespace {

struct LoadedFrame {
  RgbdFrame rgbd;
  std::optional<Mask> gt_mask;
  std::optional<RigidTransform> gt_pose;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  [[nodiscard]] virtual int count() const = 0;
  [[nodiscard]] virtual double timestamp(int i) const = 0;
  [[nodiscard]] virtual const CameraIntrinsics& intrinsics() const = 0;
  [[nodiscard]] virtual LoadedFrame load(int i) const = 0;
  [[nodiscard]] virtual int default_eval_start() const = 0;
  [[nodiscard]] virtual bool synthetic() const = 0;
};

class SynthSource : public FrameSource {
 public:
  explicit SynthSource(const RunConfig& c) : spec_(make_suite(c.suite, c.synth_width, c.synth_height)) {
    spec_.seed = c.seed;
    spec_.noise.sigma_coeff = c.noise_sigma;
    spec_.noise.dropout = c.noise_dropout;
    spec_.validate();
  }
  int count() const override { return spec_.frames; }
  double timestamp(int i) const override { return spec_.timestamp(i); }
  const CameraIntrinsics& intrinsics() const override { return spec_.intrinsics; }
  LoadedFrame load(int i) const override {
    SynthFrame f = render_frame(spec_, i);
    return {{std::move(f.intensity), std::move(f.depth)}, std::move(f.gt_mask), f.pose};
  }
  int default_eval_start() const override { return spec_.eval_start; }
  bool synthetic() const override { return true; }

 private:
  SceneSpec spec_;
};

class TumSource : public FrameSource {
 public:
  explicit TumSource(const RunConfig& c) : depth_scale_(c.depth_scale) {
    seq_ = load_sequence(c.input_dir, c.assoc_tolerance);
    if (!c.intrinsics_file.empty()) {
      K_ = read_intrinsics(c.intrinsics_file);
    } else if (fs::exists(c.input_dir / "intrinsics.txt")) {
      K_ = read_intrinsics(c.input_dir / "intrinsics.txt");
    }
    if (!c.eval_gt_masks.empty()) index_masks(c.eval_gt_masks, c.assoc_tolerance);
  }
  int count() const override { return static_cast<int>(seq_.frames.size()); }
  double timestamp(int i) const override { return seq_.frames[i].timestamp; }
  const CameraIntrinsics& intrinsics() const override { return K_; }
  LoadedFrame load(int i) const override {
    const FrameRecord& r = seq_.frames[i];
    LoadedFrame f;
    f.rgbd.intensity = to_gray(read_color_png(r.rgb_path));
    f.rgbd.depth = read_depth_png(r.depth_path, depth_scale_);
    const auto check = [&](const Grid<double>& g, const fs::path& p) {
      if (g.width() != K_.width || g.height() != K_.height) {
        throw ConfigError(p.string() + ": image size " + std::to_string(g.width()) + "x" +
                          std::to_string(g.height()) + " does not match the intrinsics");
      }
    };
    check(f.rgbd.intensity, r.rgb_path);
    check(f.rgbd.depth, r.depth_path);
    f.gt_pose = r.gt_pose;
    if (!mask_paths_.empty()) {
      if (!mask_paths_[i].empty()) {
        f.gt_mask = read_mask_png(mask_paths_[i]);
      } else {
        f.gt_mask.reset();
      }
    }
    return f;
  }
  int default_eval_start() const override { return 0; }
  bool synthetic() const override { return false; }

 private:
  void index_masks(const fs::path& dir, double tol) {
    if (!fs::is_directory(dir)) throw IoError("ground-truth mask directory not found: " + dir.string());
    std::vector<double> stamps;
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".png") continue;
      try {
        std::size_t used = 0;
        const std::string stem = e.path().stem().string();
        const double t = std::stod(stem, &used);
        if (used != stem.size()) continue;
        stamps.push_back(t);
        paths.push_back(e.path());
      } catch (const std::exception&) {
        continue;
      }
    }
    std::vector<double> frames;
    for (const auto& f : seq_.frames) frames.push_back(f.timestamp);
    mask_paths_.assign(seq_.frames.size(), {});
    for (const auto& [i, j] : associate(frames, stamps, tol)) mask_paths_[i] = paths[j];
  }

  Sequence seq_;
  CameraIntrinsics K_;
  double depth_scale_;
  std::vector<fs::path> mask_paths_;
};

bool is_config(const std::exception& e) { return dynamic_cast<const ConfigError*>(&e) != nullptr; }

[[noreturn]] void fail_at(int frame, double t, const std::string& stage, const std::exception& e) {
  throw RunError("frame " + std::to_string(frame) + " (t=" + format_timestamp(t) + "), " + stage + ": " + e.what(),
                 is_config(e));
}

template <typename Fn>
auto guarded(int frame, double t, const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const RunError&) {
    throw;
  } catch (const std::exception& e) {
    fail_at(frame, t, stage, e);
  }
}

}  // namespace

RunResult run(const RunConfig& config, const FrameCallback& on_frame) {
  std::unique_ptr<FrameSource> source;
  std::optional<Trajectory> external;
  try {
    config.validate();
    if (!config.suite.empty()) {
      source = std::make_unique<SynthSource>(config);
    } else {
      source = std::make_unique<TumSource>(config);
    }
    if (config.pose_mode == PoseMode::kExternal) external = read_trajectory(config.ext_trajectory);
    if (!config.out_dir.empty()) {
      fs::create_directories(config.out_dir / "masks");
    }
  } catch (const std::exception& e) {
    throw RunError(std::string("setup: ") + e.what(), is_config(e));
  }

  const CameraIntrinsics& K = source->intrinsics();
  const int n = config.max_frames > 0 ? std::min(config.max_frames, source->count()) : source->count();
  RunResult result;
  result.eval_start = config.eval_start >= 0 ? config.eval_start : source->default_eval_start();

  OcclusionDetector detector(K, config.occlusion);
  Pyramid prev_pyramid;
  std::optional<RigidTransform> prev_ref_pose;  // external / ground-truth pose of the previous frame
  Twist velocity;
  RigidTransform pose;
  std::vector<RigidTransform> gt_poses;
  bool all_gt = true;
  std::vector<FrameScore> scores;
  std::vector<double> scored_stamps;

  for (int i = 0; i < n; ++i) {
    const double t = source->timestamp(i);
    LoadedFrame frame = guarded(i, t, "load", [&] { return source->load(i); });
    if (frame.gt_pose) {
      gt_poses.push_back(*frame.gt_pose);
    } else {
      all_gt = false;
    }

    Twist xi;
    std::optional<RigidTransform> ref_pose;
    if (config.pose_mode == PoseMode::kExternal) {
      ref_pose = guarded(i, t, "external pose", [&] { return pose_lookup(*external, t, config.assoc_tolerance); });
    } else if (config.pose_mode == PoseMode::kGroundTruth) {
      if (!frame.gt_pose) {
        fail_at(i, t, "ground-truth pose", ConfigError("no ground-truth pose for this frame"));
      }
      ref_pose = frame.gt_pose;
    }

    Pyramid pyramid;
    if (config.pose_mode == PoseMode::kEstimate) {
      pyramid = guarded(i, t, "pyramid", [&] { return build_pyramid(frame.rgbd, K, config.dvo.pyramid_levels); });
    }
    if (i == 0) {
      pose = frame.gt_pose.value_or(ref_pose.value_or(RigidTransform::identity()));
    } else if (config.pose_mode == PoseMode::kEstimate) {
      const Mask gate = config.mask_odometry ? detector.state().B : Mask{};
      const PoseEstimate est = guarded(i, t, "odometry", [&] {
        return estimate_pose(prev_pyramid, pyramid, gate, velocity, config.dvo);
      });
      xi = est.xi;
      if (config.mask_odometry && config.refine_pose) {
        AccumulationState trial = detector.state();
        guarded(i, t, "trial detection", [&] {
          return step(trial, frame.rgbd.intensity, frame.rgbd.depth, xi, K, config.occlusion);
        });
        xi = guarded(i, t, "odometry refinement", [&] {
          return estimate_pose(prev_pyramid, pyramid, gate, xi, config.dvo, trial.B).xi;
        });
      }
      velocity = xi;
    } else {
      xi = guarded(i, t, "relative pose", [&] { return log_se3(prev_ref_pose->inverse() * *ref_pose); });
    }
    if (i > 0) pose = pose * exp_se3(xi);

    const Mask objects = guarded(i, t, "occlusion", [&] {
      return detector.process(frame.rgbd.intensity, frame.rgbd.depth, xi);
    });
    Mask binary(objects.width(), objects.height(), 0);
    for (std::size_t k = 0; k < binary.size(); ++k) binary[k] = objects[k] != 0;

    if (!config.out_dir.empty()) {
      guarded(i, t, "write mask", [&] {
        write_mask_png(config.out_dir / "masks" / (format_timestamp(t) + ".png"), binary);
        return 0;
      });
    }
    if (config.eval_f1 && frame.gt_mask && i >= result.eval_start) {
      scores.push_back(guarded(i, t, "f1", [&] { return f1_frame(binary, *frame.gt_mask); }));
      scored_stamps.push_back(t);
    }
    if (on_frame) on_frame(i, binary, xi);

    result.timestamps.push_back(t);
    result.trajectory.poses.push_back({t, pose});
    result.relative.push_back(xi);
    result.object_masks.push_back(std::move(binary));
    prev_pyramid = std::move(pyramid);
    prev_ref_pose = ref_pose;
  }

  if (!scores.empty()) result.segmentation = f1_sequence(scores);
  const int delta = config.resolved_rpe_delta();
  if (config.eval_rpe && all_gt && !gt_poses.empty() && static_cast<int>(gt_poses.size()) > delta) {
    std::vector<RigidTransform> est;
    for (const auto& p : result.trajectory.poses) est.push_back(p.pose);
    result.rpe = rpe(est, gt_poses, delta, result.timestamps);
  }

  if (!config.out_dir.empty()) {
    try {
      write_trajectory(result.trajectory, config.out_dir / "trajectory.txt");
      if (result.segmentation) write_f1_csv(config.out_dir / "f1.csv", scored_stamps, *result.segmentation);
      if (result.rpe) write_rpe_csv(config.out_dir / "rpe.csv", *result.rpe);
      write_manifest(config.out_dir / "manifest.txt", config);
    } catch (const std::exception& e) {
      throw RunError(std::string("writing outputs: ") + e.what(), false);
    }
  }
  return result;
}

}  // namespace occdvo
