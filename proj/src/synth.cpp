#include "occdvo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/Geometry>

namespace occdvo {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t seed, std::int64_t i, std::int64_t j, std::int64_t k) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  h = splitmix64(h ^ static_cast<std::uint64_t>(j));
  h = splitmix64(h ^ static_cast<std::uint64_t>(k));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, const Eigen::Vector3d& p) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto i = static_cast<std::int64_t>(fx), j = static_cast<std::int64_t>(fy), k = static_cast<std::int64_t>(fz);
  const double u = smooth(p.x() - fx), v = smooth(p.y() - fy), w = smooth(p.z() - fz);
  double c[2][2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) c[a][b][d] = lattice(seed, i + a, j + b, k + d);
  const auto lerp = [](double x0, double x1, double t) { return x0 + (x1 - x0) * t; };
  const double x00 = lerp(c[0][0][0], c[1][0][0], u), x10 = lerp(c[0][1][0], c[1][1][0], u);
  const double x01 = lerp(c[0][0][1], c[1][0][1], u), x11 = lerp(c[0][1][1], c[1][1][1], u);
  return lerp(lerp(x00, x10, v), lerp(x01, x11, v), w);
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int object = -1;
  Eigen::Vector3d local = Eigen::Vector3d::Zero();
};

constexpr double kMinT = 1e-9;

// Ray o + t d in object coordinates; returns the smallest t > kMinT.
std::optional<double> intersect(const SceneObject& obj, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Vector3d& s = obj.size;
  switch (obj.kind) {
    case ShapeKind::kPlane: {
      if (d.z() == 0.0) return std::nullopt;
      const double t = -o.z() / d.z();
      if (!(t > kMinT)) return std::nullopt;
      const Eigen::Vector3d p = o + t * d;
      if (std::abs(p.x()) > s.x() || std::abs(p.y()) > s.y()) return std::nullopt;
      return t;
    }
    case ShapeKind::kBox: {
      double t0 = -std::numeric_limits<double>::infinity();
      double t1 = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
          if (std::abs(o[a]) > s[a]) return std::nullopt;
          continue;
        }
        double ta = (-s[a] - o[a]) / d[a];
        double tb = (s[a] - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
      }
      if (t0 > t1 || !(t0 > kMinT)) return std::nullopt;
      return t0;
    }
    case ShapeKind::kSphere: {
      const double r = s.x();
      const double a = d.squaredNorm();
      const double b = o.dot(d);
      const double c = o.squaredNorm() - r * r;
      const double disc = b * b - a * c;
      if (disc < 0.0) return std::nullopt;
      const double t = (-b - std::sqrt(disc)) / a;
      if (!(t > kMinT)) return std::nullopt;
      return t;
    }
  }
  return std::nullopt;
}

bool contains_point(const SceneObject& obj, const Eigen::Vector3d& p) {
  switch (obj.kind) {
    case ShapeKind::kPlane:
      return false;
    case ShapeKind::kBox:
      return (p.cwiseAbs() - obj.size).maxCoeff() < 0.0;
    case ShapeKind::kSphere:
      return p.norm() < obj.size.x();
  }
  return false;
}

}  // namespace

double texture_value(const Texture& tex, const Eigen::Vector3d& p) {
  double sum = 0.0;
  double norm = 0.0;
  double amp = 1.0;
  double cell = tex.cell * std::pow(2.0, tex.octaves - 1);
  for (int o = 0; o < tex.octaves; ++o) {
    sum += amp * value_noise(tex.seed * 1315423911ULL + static_cast<std::uint64_t>(o), p / cell);
    norm += amp;
    amp *= 0.6;
    cell *= 0.5;
  }
  return std::clamp(tex.mean + tex.amplitude * sum / norm, 0.0, 1.0);
}

const RigidTransform& SceneObject::pose(int frame) const {
  return trajectory.size() == 1 ? trajectory.front() : trajectory.at(static_cast<std::size_t>(frame));
}

const RigidTransform& SceneSpec::camera_pose(int frame) const {
  return camera.size() == 1 ? camera.front() : camera.at(static_cast<std::size_t>(frame));
}

void SceneSpec::validate() const {
  intrinsics.validate();
  if (frames < 1) throw ConfigError("scene needs at least one frame");
  if (!(frame_rate > 0.0)) throw ConfigError("frame rate must be positive");
  const auto check = [&](std::size_t n, const std::string& what) {
    if (n != 1 && n != static_cast<std::size_t>(frames)) {
      throw ConfigError(what + " trajectory must have 1 or " + std::to_string(frames) + " poses");
    }
  };
  check(camera.size(), "camera");
  for (const auto& c : camera) {
    if (!c.is_valid(1e-9)) throw ConfigError("camera pose is not rigid");
  }
  for (const auto& obj : objects) {
    check(obj.trajectory.size(), "object '" + obj.name + "'");
    const int dims = obj.kind == ShapeKind::kPlane ? 2 : obj.kind == ShapeKind::kSphere ? 1 : 3;
    for (int a = 0; a < dims; ++a) {
      if (!(obj.size[a] > 0.0)) throw ConfigError("object '" + obj.name + "' has a non-positive extent");
    }
    for (const auto& p : obj.trajectory) {
      if (!p.is_valid(1e-9)) throw ConfigError("object '" + obj.name + "' pose is not rigid");
    }
    if (!(obj.texture.cell > 0.0) || obj.texture.octaves < 1) throw ConfigError("invalid texture");
  }
  if (noise.sigma_coeff < 0.0 || noise.dropout < 0.0 || noise.dropout >= 1.0) {
    throw ConfigError("invalid depth noise parameters");
  }
  if (eval_start < 0 || eval_start >= frames) throw ConfigError("eval_start out of range");
  if (supersample < 1) throw ConfigError("supersample must be at least 1");
}

Trajectory SceneSpec::camera_trajectory() const {
  Trajectory traj;
  for (int i = 0; i < frames; ++i) traj.poses.push_back({timestamp(i), camera_pose(i)});
  return traj;
}

SynthFrame render_frame(const SceneSpec& spec, int frame) {
  if (frame < 0 || frame >= spec.frames) throw ConfigError("frame index out of range");
  const CameraIntrinsics& K = spec.intrinsics;
  const RigidTransform& cam = spec.camera_pose(frame);

  // Everything is intersected in object coordinates; the ray parameter is
  // shared because the transforms are rigid.
  struct Local {
    Eigen::Matrix3d R;  // object from camera rotation
    Eigen::Vector3d o;  // camera center in object coordinates
  };
  std::vector<Local> locals;
  locals.reserve(spec.objects.size());
  for (const auto& obj : spec.objects) {
    const RigidTransform obj_from_cam = obj.pose(frame).inverse() * cam;
    locals.push_back({obj_from_cam.R, obj_from_cam.t});
    if (contains_point(obj, obj_from_cam.t)) {
      throw DegenerateError("degenerate viewpoint: camera inside '" + obj.name + "' at frame " +
                            std::to_string(frame));
    }
  }

  SynthFrame out;
  out.timestamp = spec.timestamp(frame);
  out.pose = cam;
  out.intensity = IntensityImage(K.width, K.height, 0.0);
  out.depth = DepthImage(K.width, K.height, DepthImage::kInvalid);
  out.gt_mask = Mask(K.width, K.height, 0);
  const auto cast = [&](double px, double py) {
    const Eigen::Vector3d d((px - K.cx) / K.fx, (py - K.cy) / K.fy, 1.0);
    Hit hit;
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      const Eigen::Vector3d dl = locals[k].R * d;
      const auto t = intersect(spec.objects[k], locals[k].o, dl);
      if (t && *t < hit.t) {
        hit.t = *t;
        hit.object = static_cast<int>(k);
        hit.local = locals[k].o + *t * dl;
      }
    }
    return hit;
  };
  // Intensity averages an n x n grid of rays over the pixel footprint; depth
  // and mask come from the center ray alone.
  const int n = spec.supersample;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const Hit hit = cast(x, y);
      if (hit.object < 0) continue;
      const SceneObject& obj = spec.objects[static_cast<std::size_t>(hit.object)];
      out.depth(x, y) = hit.t;
      out.gt_mask(x, y) = obj.moving ? 1 : 0;
      if (n <= 1) {
        out.intensity(x, y) = texture_value(obj.texture, hit.local);
        continue;
      }
      double sum = 0.0;
      int count = 0;
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const Hit h = cast(x - 0.5 + (i + 0.5) / n, y - 0.5 + (j + 0.5) / n);
          if (h.object < 0) continue;
          sum += texture_value(spec.objects[static_cast<std::size_t>(h.object)].texture, h.local);
          ++count;
        }
      }
      out.intensity(x, y) = count > 0 ? sum / count : texture_value(obj.texture, hit.local);
    }
  }

  if (spec.noise.sigma_coeff > 0.0 || spec.noise.dropout > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(frame)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < out.depth.size(); ++i) {
      const double z = out.depth[i];
      if (z <= 0.0) continue;
      const double n = gauss(rng);
      const double drop = unit(rng);
      if (drop < spec.noise.dropout) {
        out.depth[i] = DepthImage::kInvalid;
      } else {
        out.depth[i] = std::max(1e-6, z + spec.noise.sigma_coeff * z * z * n);
      }
    }
  }
  return out;
}

std::vector<SynthFrame> render(const SceneSpec& spec) {
  spec.validate();
  std::vector<SynthFrame> frames;
  frames.reserve(static_cast<std::size_t>(spec.frames));
  for (int i = 0; i < spec.frames; ++i) frames.push_back(render_frame(spec, i));
  return frames;
}

// ---------------------------------------------------------------------------
// Scenario catalog

namespace {

Eigen::Matrix3d rot(double angle, const Eigen::Vector3d& axis) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

SceneObject wall(double z, double half_w, double half_h, std::uint64_t seed) {
  SceneObject o;
  o.name = "wall";
  o.kind = ShapeKind::kPlane;
  o.size = {half_w, half_h, 0.0};
  o.texture.seed = seed;
  o.texture.cell = 0.05;
  o.trajectory = {RigidTransform::translation({0.0, 0.0, z})};
  return o;
}

// Horizontal plane at height y (camera y points down) spanning z in [z0, z1].
SceneObject floor_plane(double y, double z0, double z1, double half_w, std::uint64_t seed) {
  SceneObject o;
  o.name = "floor";
  o.kind = ShapeKind::kPlane;
  o.size = {half_w, 0.5 * (z1 - z0), 0.0};
  o.texture.seed = seed;
  o.texture.cell = 0.05;
  o.trajectory = {RigidTransform(rot(std::numbers::pi / 2, Eigen::Vector3d::UnitX()), {0.0, y, 0.5 * (z0 + z1)})};
  return o;
}

SceneObject box(const std::string& name, const Eigen::Vector3d& half, std::uint64_t seed) {
  SceneObject o;
  o.name = name;
  o.kind = ShapeKind::kBox;
  o.size = half;
  o.texture.seed = seed;
  o.texture.cell = 0.03;
  o.moving = true;
  return o;
}

SceneSpec base(const std::string& name, int width, int height, int frames) {
  SceneSpec s;
  s.name = name;
  s.intrinsics = CameraIntrinsics::kinect_scaled(width, height);
  s.frames = frames;
  s.camera = {RigidTransform::identity()};
  return s;
}

// Fixed camera; a box at 1.5 m slides across a textured wall at 2 m.
SceneSpec static_box(int width, int height) {
  SceneSpec s = base("static_box", width, height, 60);
  s.objects.push_back(wall(2.0, 4.0, 3.0, 11));
  SceneObject b = box("box", {0.2, 0.2, 0.03}, 12);
  for (int i = 0; i < s.frames; ++i) {
    b.trajectory.push_back(RigidTransform::translation({-1.3 + 0.04 * i, 0.05, 1.5}));
  }
  s.objects.push_back(b);
  s.eval_start = 12;
  return s;
}

// Slow camera drift while a large box slides in and ends up covering most of
// the view.
SceneSpec dominant_object(int width, int height) {
  SceneSpec s = base("dominant_object", width, height, 70);
  s.objects.push_back(wall(3.0, 6.0, 4.0, 21));
  s.objects.push_back(floor_plane(1.0, 0.0, 3.0, 6.0, 22));
  s.camera.clear();
  for (int i = 0; i < s.frames; ++i) {
    s.camera.emplace_back(rot(deg(-0.05 * i), Eigen::Vector3d::UnitY()), Eigen::Vector3d(0.004 * i, 0.0, 0.0));
  }
  SceneObject b = box("panel", {0.45, 0.65, 0.05}, 23);
  for (int i = 0; i < s.frames; ++i) {
    b.trajectory.push_back(RigidTransform::translation({1.3 - 0.02 * i, 0.0, 1.3}));
  }
  s.objects.push_back(b);
  s.eval_start = 12;
  return s;
}

// Fixed camera; a box enters, rests for 30 frames and leaves again.
SceneSpec construct(int width, int height) {
  SceneSpec s = base("construct", width, height, 90);
  s.objects.push_back(wall(2.0, 4.0, 3.0, 31));
  SceneObject b = box("crate", {0.25, 0.25, 0.2}, 32);
  for (int i = 0; i < s.frames; ++i) {
    const int moved = i < 30 ? i : i < 60 ? 30 : i - 30;
    b.trajectory.push_back(RigidTransform::translation({-1.35 + 0.04 * moved, 0.0, 1.4}));
  }
  s.objects.push_back(b);
  s.eval_start = 12;
  return s;
}

// Camera yaws right while a box enters from the right edge through the newly
// revealed area and moves left.
SceneSpec dynamic_pan(int width, int height) {
  SceneSpec s = base("dynamic_pan", width, height, 60);
  s.objects.push_back(wall(3.0, 8.0, 4.0, 41));
  s.objects.push_back(floor_plane(1.0, 0.0, 3.0, 8.0, 42));
  s.camera.clear();
  for (int i = 0; i < s.frames; ++i) {
    s.camera.emplace_back(rot(deg(0.4 * i), Eigen::Vector3d::UnitY()), Eigen::Vector3d::Zero());
  }
  SceneObject b = box("cart", {0.25, 0.3, 0.2}, 43);
  for (int i = 0; i < s.frames; ++i) {
    b.trajectory.push_back(RigidTransform::translation({1.44 - 0.013 * i, 0.1, 1.6}));
  }
  s.objects.push_back(b);
  s.eval_start = 12;
  return s;
}

// Fixed camera; two small boxes fly past on arcs in opposite directions.
SceneSpec toss(int width, int height) {
  SceneSpec s = base("toss", width, height, 50);
  s.objects.push_back(wall(2.5, 5.0, 4.0, 51));
  s.objects.push_back(floor_plane(1.0, 0.0, 2.5, 5.0, 52));
  SceneObject a = box("ball_a", {0.09, 0.09, 0.09}, 53);
  SceneObject b = box("ball_b", {0.1, 0.1, 0.1}, 54);
  for (int i = 0; i < s.frames; ++i) {
    const double sa = i / 40.0;
    a.trajectory.emplace_back(rot(0.06 * i, Eigen::Vector3d(1.0, 1.0, 0.0)),
                              Eigen::Vector3d(-0.95 + 1.9 * sa, 0.3 - 0.7 * 4.0 * sa * (1.0 - sa), 1.2));
    const double sb = (i - 8) / 42.0;
    b.trajectory.emplace_back(rot(-0.05 * i, Eigen::Vector3d(0.0, 1.0, 1.0)),
                              Eigen::Vector3d(1.3 - 2.6 * sb, 0.25 - 0.6 * 4.0 * sb * (1.0 - sb), 1.7));
  }
  s.objects.push_back(a);
  s.objects.push_back(b);
  s.eval_start = 5;
  return s;
}

}  // namespace

std::vector<std::string> suite_names() { return {"static_box", "dominant_object", "construct", "dynamic_pan", "toss"}; }

SceneSpec make_suite(const std::string& name, int width, int height) {
  SceneSpec s;
  if (name == "static_box") {
    s = static_box(width, height);
  } else if (name == "dominant_object") {
    s = dominant_object(width, height);
  } else if (name == "construct") {
    s = construct(width, height);
  } else if (name == "dynamic_pan") {
    s = dynamic_pan(width, height);
  } else if (name == "toss") {
    s = toss(width, height);
  } else {
    throw ConfigError("unknown synthetic suite '" + name + "'");
  }
  s.validate();
  return s;
}

std::vector<SceneSpec> standard_suites(int width, int height) {
  std::vector<SceneSpec> out;
  for (const auto& n : suite_names()) out.push_back(make_suite(n, width, height));
  return out;
}

void export_tum(const SceneSpec& spec, const fs::path& dir, double depth_scale) {
  spec.validate();
  std::error_code ec;
  for (const char* sub : {"rgb", "depth", "gt_masks"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw IoError("cannot create " + (dir / sub).string() + ": " + ec.message());
  }
  std::ofstream rgb_idx(dir / "rgb.txt");
  std::ofstream depth_idx(dir / "depth.txt");
  if (!rgb_idx || !depth_idx) throw IoError("cannot write index files in " + dir.string());
  rgb_idx << "# color images\n# timestamp filename\n";
  depth_idx << "# depth maps\n# timestamp filename\n";
  for (int i = 0; i < spec.frames; ++i) {
    const SynthFrame f = render_frame(spec, i);
    const std::string stamp = format_timestamp(f.timestamp);
    write_gray_png(dir / "rgb" / (stamp + ".png"), f.intensity);
    write_depth_png(dir / "depth" / (stamp + ".png"), f.depth, depth_scale);
    write_mask_png(dir / "gt_masks" / (stamp + ".png"), f.gt_mask);
    rgb_idx << stamp << " rgb/" << stamp << ".png\n";
    depth_idx << stamp << " depth/" << stamp << ".png\n";
  }
  if (!rgb_idx || !depth_idx) throw IoError("failed writing index files in " + dir.string());
  write_trajectory(spec.camera_trajectory(), dir / "groundtruth.txt");
  write_intrinsics(dir / "intrinsics.txt", spec.intrinsics);
}

}  // namespace occdvo
