#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "occdvo/dataset_io.hpp"
#include "occdvo/eval.hpp"
#include "occdvo/geometry.hpp"
#include "occdvo/occlusion.hpp"
#include "occdvo/odometry.hpp"
#include "occdvo/pipeline.hpp"
#include "occdvo/synth.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace occdvo;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
Grid<T> to_grid(const Array<T>& a, const char* what) {
  if (a.ndim() != 2) throw ConfigError(std::string(what) + " must be a 2-D array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  return Grid<T>(w, h, std::vector<T>(a.data(), a.data() + a.size()));
}

DepthImage depth_arg(const Array<double>& a) { return DepthImage(to_grid(a, "depth")); }
IntensityImage intensity_arg(const Array<double>& a) { return IntensityImage(to_grid(a, "intensity")); }
Mask mask_arg(const Array<std::uint8_t>& a) { return to_grid(a, "mask"); }
Grid<double> grid_arg(const Array<double>& a) { return to_grid(a, "grid"); }

template <typename T>
py::array_t<T> to_array(const Grid<T>& g) {
  py::array_t<T> out({g.height(), g.width()});
  std::copy(g.data().begin(), g.data().end(), out.mutable_data());
  return out;
}

Twist twist_arg(const Vector6d& xi) { return Twist(xi); }

Eigen::Matrix4d pose_matrix(const RigidTransform& T) { return T.matrix(); }

RigidTransform pose_arg(const Eigen::Matrix4d& M) {
  const RigidTransform T(M.topLeftCorner<3, 3>(), M.topRightCorner<3, 1>());
  if (!T.is_valid(1e-6)) throw GeometryError("matrix is not a rigid transform");
  return T;
}

py::dict frame_dict(const SynthFrame& f) {
  py::dict d;
  d["timestamp"] = f.timestamp;
  d["intensity"] = to_array<double>(f.intensity);
  d["depth"] = to_array<double>(f.depth);
  d["gt_mask"] = to_array<std::uint8_t>(f.gt_mask);
  d["pose"] = pose_matrix(f.pose);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Moving-object detection by occlusion accumulation with masked dense RGB-D odometry.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
  auto degenerate = py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
  py::register_exception<DegenerateResidualError>(m, "DegenerateResidualError", degenerate.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<RunError>(m, "RunError", base.ptr());

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init<>())
      .def(py::init([](double fx, double fy, double cx, double cy, int width, int height) {
             CameraIntrinsics k{fx, fy, cx, cy, width, height};
             k.validate();
             return k;
           }),
           "fx"_a, "fy"_a, "cx"_a, "cy"_a, "width"_a, "height"_a)
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height)
      .def_static("kinect_scaled", &CameraIntrinsics::kinect_scaled, "width"_a, "height"_a)
      .def("__repr__", [](const CameraIntrinsics& k) {
        return "CameraIntrinsics(fx=" + std::to_string(k.fx) + ", fy=" + std::to_string(k.fy) +
               ", cx=" + std::to_string(k.cx) + ", cy=" + std::to_string(k.cy) + ", " +
               std::to_string(k.width) + "x" + std::to_string(k.height) + ")";
      });

  // Geometry. Twists are (v, w) 6-vectors, poses 4x4 matrices.
  m.def("exp_se3", [](const Vector6d& xi) { return pose_matrix(exp_se3(twist_arg(xi))); }, "xi"_a);
  m.def("log_se3", [](const Eigen::Matrix4d& T) { return log_se3(pose_arg(T)).vector(); }, "T"_a);
  m.def(
      "project",
      [](const Eigen::Vector3d& p, const CameraIntrinsics& K) {
        const Pixel u = project(p, K);
        return Eigen::Vector2d(u.x, u.y);
      },
      "p"_a, "K"_a);
  m.def(
      "unproject", [](const Eigen::Vector2d& u, double z, const CameraIntrinsics& K) { return unproject({u.x(), u.y()}, z, K); },
      "u"_a, "z"_a, "K"_a);

  // Robust cost.
  m.def("bisquare_rho", &bisquare_rho, "e"_a, "k"_a);
  m.def("bisquare_weight", &bisquare_weight, "e"_a, "k"_a);
  m.def("bisquare_derivative", &bisquare_derivative, "e"_a, "k"_a);

  py::enum_<NewAreaGradient>(m, "NewAreaGradient")
      .value("DEPTH_CONSISTENT", NewAreaGradient::kDepthConsistent)
      .value("ADDITIVE", NewAreaGradient::kAdditive);

  py::class_<OcclusionParams>(m, "OcclusionParams")
      .def(py::init<>())
      .def_readwrite("alpha", &OcclusionParams::alpha)
      .def_readwrite("beta", &OcclusionParams::beta)
      .def_readwrite("min_component_px", &OcclusionParams::min_component_px)
      .def_readwrite("border_margin_px", &OcclusionParams::border_margin_px)
      .def_readwrite("predict_new_area", &OcclusionParams::predict_new_area)
      .def_readwrite("new_area_gradient", &OcclusionParams::new_area_gradient)
      .def("validate", &OcclusionParams::validate);

  py::class_<DvoParams>(m, "DvoParams")
      .def(py::init<>())
      .def_readwrite("k_I", &DvoParams::k_I)
      .def_readwrite("k_Z", &DvoParams::k_Z)
      .def_readwrite("gamma", &DvoParams::gamma)
      .def_readwrite("pyramid_levels", &DvoParams::pyramid_levels)
      .def_readwrite("max_iterations", &DvoParams::max_iterations)
      .def_readwrite("min_pixels", &DvoParams::min_pixels)
      .def("validate", &DvoParams::validate);

  // Occlusion.
  m.def(
      "occlusion_map",
      [](const Array<double>& Z_prev, const Array<double>& Z_cur, const Vector6d& xi, const CameraIntrinsics& K) {
        const OcclusionMap om = occlusion_map(depth_arg(Z_prev), depth_arg(Z_cur), twist_arg(xi), K);
        py::dict d;
        d["dz"] = to_array<double>(om.dz);
        d["valid"] = to_array<std::uint8_t>(om.valid);
        d["new_area"] = to_array<std::uint8_t>(om.new_area);
        return d;
      },
      "Z_prev"_a, "Z_cur"_a, "xi"_a, "K"_a);
  m.def(
      "compensate_depth",
      [](const Array<double>& Z_cur, const Array<double>& Z_prev, const Vector6d& xi, const CameraIntrinsics& K) {
        return to_array<double>(compensate_depth(depth_arg(Z_cur), depth_arg(Z_prev), twist_arg(xi), K));
      },
      "Z_cur"_a, "Z_prev"_a, "xi"_a, "K"_a);
  m.def(
      "predict_new_area",
      [](const Array<double>& A, const Array<double>& Z, const Array<std::uint8_t>& new_area,
         const OcclusionParams& p) {
        return to_array<double>(predict_new_area(grid_arg(A), depth_arg(Z), mask_arg(new_area), p));
      },
      "A"_a, "Z_cur"_a, "new_area"_a, "params"_a = OcclusionParams{});
  m.def(
      "background_mask",
      [](const Array<double>& A, const Array<double>& Z, const OcclusionParams& p) {
        return to_array<std::uint8_t>(background_mask(grid_arg(A), depth_arg(Z), p));
      },
      "A"_a, "Z_cur"_a, "params"_a = OcclusionParams{});

  py::class_<OcclusionDetector>(m, "OcclusionDetector")
      .def(py::init<const CameraIntrinsics&, const OcclusionParams&>(), "K"_a, "params"_a = OcclusionParams{})
      .def(
          "initialize",
          [](OcclusionDetector& d, const Array<double>& I, const Array<double>& Z) {
            return to_array<std::uint8_t>(d.initialize(intensity_arg(I), depth_arg(Z)));
          },
          "intensity"_a, "depth"_a)
      .def(
          "process",
          [](OcclusionDetector& d, const Array<double>& I, const Array<double>& Z, const Vector6d& xi) {
            return to_array<std::uint8_t>(d.process(intensity_arg(I), depth_arg(Z), twist_arg(xi)));
          },
          "intensity"_a, "depth"_a, "xi"_a, "Object mask (255 = moving object) after one frame.")
      .def_property_readonly("initialized", &OcclusionDetector::initialized)
      .def_property_readonly("A", [](const OcclusionDetector& d) { return to_array<double>(d.state().A); })
      .def_property_readonly("B", [](const OcclusionDetector& d) { return to_array<std::uint8_t>(d.state().B); });

  // Odometry.
  m.def(
      "estimate_pose",
      [](const Array<double>& I_prev, const Array<double>& Z_prev, const Array<double>& I_cur,
         const Array<double>& Z_cur, const CameraIntrinsics& K, std::optional<Array<std::uint8_t>> background,
         std::optional<Vector6d> xi_init, const DvoParams& params) {
        const RgbdFrame prev{intensity_arg(I_prev), depth_arg(Z_prev)};
        const RgbdFrame cur{intensity_arg(I_cur), depth_arg(Z_cur)};
        const Mask B = background ? mask_arg(*background) : Mask{};
        const Twist init = xi_init ? Twist(*xi_init) : Twist();
        const PoseEstimate e = estimate_pose(prev, cur, B, init, params, K);
        py::dict d;
        d["xi"] = e.xi.vector();
        d["cost"] = e.report.cost;
        d["pixels"] = e.report.count;
        d["iterations"] = e.iterations;
        return d;
      },
      "I_prev"_a, "Z_prev"_a, "I_cur"_a, "Z_cur"_a, "K"_a, "background"_a = py::none(), "xi_init"_a = py::none(),
      "params"_a = DvoParams{});

  // Synthetic scenes.
  m.def("suite_names", &suite_names);
  m.def(
      "render_suite",
      [](const std::string& name, int width, int height, std::optional<int> frames) {
        const SceneSpec s = make_suite(name, width, height);
        py::list out;
        const int n = frames ? std::min(*frames, s.frames) : s.frames;
        for (int i = 0; i < n; ++i) out.append(frame_dict(render_frame(s, i)));
        return out;
      },
      "name"_a, "width"_a = 320, "height"_a = 240, "frames"_a = py::none(),
      "List of frames with intensity, depth, gt_mask, pose and timestamp.");
  m.def(
      "suite_intrinsics", [](const std::string& name, int w, int h) { return make_suite(name, w, h).intrinsics; },
      "name"_a, "width"_a = 320, "height"_a = 240);
  m.def(
      "export_suite",
      [](const std::string& name, const std::filesystem::path& dir, int w, int h) {
        export_tum(make_suite(name, w, h), dir);
      },
      "name"_a, "directory"_a, "width"_a = 320, "height"_a = 240);

  // Evaluation.
  m.def(
      "f1_frame",
      [](const Array<std::uint8_t>& pred, const Array<std::uint8_t>& gt) {
        const FrameScore s = f1_frame(mask_arg(pred), mask_arg(gt));
        py::dict d;
        d["precision"] = s.precision;
        d["recall"] = s.recall;
        d["f1"] = s.f1;
        d["tp"] = s.tp;
        d["fp"] = s.fp;
        d["fn"] = s.fn;
        d["scored"] = s.scored;
        return d;
      },
      "pred"_a, "gt"_a);
  m.def(
      "rpe",
      [](const std::vector<Eigen::Matrix4d>& est, const std::vector<Eigen::Matrix4d>& gt, int delta) {
        std::vector<RigidTransform> P, Q;
        for (const auto& M : est) P.push_back(pose_arg(M));
        for (const auto& M : gt) Q.push_back(pose_arg(M));
        const RpeScore r = rpe(P, Q, delta);
        return py::make_tuple(r.translation_rmse, r.rotation_rmse_deg);
      },
      "estimated"_a, "gt"_a, "delta"_a, "(translation RMSE in m, rotation RMSE in degrees)");

  // Pipeline.
  py::enum_<PoseMode>(m, "PoseMode")
      .value("ESTIMATE", PoseMode::kEstimate)
      .value("EXTERNAL", PoseMode::kExternal)
      .value("GROUND_TRUTH", PoseMode::kGroundTruth);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("input_dir", &RunConfig::input_dir)
      .def_readwrite("suite", &RunConfig::suite)
      .def_readwrite("synth_width", &RunConfig::synth_width)
      .def_readwrite("synth_height", &RunConfig::synth_height)
      .def_readwrite("pose_mode", &RunConfig::pose_mode)
      .def_readwrite("ext_trajectory", &RunConfig::ext_trajectory)
      .def_readwrite("intrinsics_file", &RunConfig::intrinsics_file)
      .def_readwrite("depth_scale", &RunConfig::depth_scale)
      .def_readwrite("occlusion", &RunConfig::occlusion)
      .def_readwrite("dvo", &RunConfig::dvo)
      .def_readwrite("mask_odometry", &RunConfig::mask_odometry)
      .def_readwrite("refine_pose", &RunConfig::refine_pose)
      .def_readwrite("out_dir", &RunConfig::out_dir)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("noise_sigma", &RunConfig::noise_sigma)
      .def_readwrite("noise_dropout", &RunConfig::noise_dropout)
      .def_readwrite("rpe_delta", &RunConfig::rpe_delta)
      .def_readwrite("eval_start", &RunConfig::eval_start)
      .def_readwrite("eval_gt_masks", &RunConfig::eval_gt_masks)
      .def_readwrite("max_frames", &RunConfig::max_frames)
      .def("validate", &RunConfig::validate)
      .def("manifest", [](const RunConfig& c) { return manifest_text(c); });

  m.def(
      "run",
      [](const RunConfig& c) {
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(c);
        }
        py::dict d;
        d["timestamps"] = r.timestamps;
        std::vector<Eigen::Matrix4d> poses;
        for (const auto& p : r.trajectory.poses) poses.push_back(pose_matrix(p.pose));
        d["poses"] = poses;
        py::list masks;
        for (const auto& mk : r.object_masks) masks.append(to_array<std::uint8_t>(mk));
        d["masks"] = masks;
        d["mean_f1"] = r.segmentation ? py::object(py::float_(r.segmentation->mean_f1)) : py::none();
        d["rpe_translation"] = r.rpe ? py::object(py::float_(r.rpe->translation_rmse)) : py::none();
        d["rpe_rotation_deg"] = r.rpe ? py::object(py::float_(r.rpe->rotation_rmse_deg)) : py::none();
        return d;
      },
      "config"_a);

  m.attr("__version__") = OCCDVO_VERSION;
}
