#include "occdvo/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <tuple>

#include <Eigen/Geometry>
#include <png.h>

namespace occdvo {

namespace fs = std::filesystem;

void Trajectory::validate() const {
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (!poses[i].pose.is_valid(1e-6)) throw DataError("trajectory pose " + std::to_string(i) + " is not rigid");
    if (i > 0 && !(poses[i].timestamp > poses[i - 1].timestamp)) {
      throw DataError("trajectory timestamps must be strictly increasing");
    }
  }
}

// ---------------------------------------------------------------------------
// Index files and association

namespace {

// Splits a line into whitespace-separated tokens; empty for blank/comment lines.
std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  const auto hash = line.find('#');
  std::istringstream is(hash == std::string::npos ? line : line.substr(0, hash));
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s, const fs::path& file, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(file.string() + ":" + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  }
}

}  // namespace

std::vector<IndexEntry> read_index_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open index file " + path.string());
  std::vector<IndexEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    if (tok.size() < 2) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 'timestamp path'");
    }
    out.push_back({parse_double(tok[0], path, line_no), tok[1]});
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> associate(const std::vector<double>& a, const std::vector<double>& b,
                                                           double tolerance) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < a.size(); ++i) {
    // b is usually sorted but not required to be; a linear scan keeps it simple.
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = std::abs(a[i] - b[j]);
      if (d <= tolerance) candidates.emplace_back(d, i, j);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& [d, i, j] : candidates) {
    if (used_a[i] || used_b[j]) continue;
    used_a[i] = used_b[j] = 1;
    out.emplace_back(i, j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Sequence load_sequence(const fs::path& root, double assoc_tolerance) {
  if (!fs::is_directory(root)) throw IoError("input is not a directory: " + root.string());
  if (fs::is_empty(root)) throw DataError("empty sequence: " + root.string() + " contains no files");
  const auto rgb = read_index_file(root / "rgb.txt");
  const auto depth = read_index_file(root / "depth.txt");

  std::vector<double> ta, tb;
  for (const auto& e : rgb) ta.push_back(e.timestamp);
  for (const auto& e : depth) tb.push_back(e.timestamp);
  const auto pairs = associate(ta, tb, assoc_tolerance);
  if (pairs.empty()) throw DataError("empty sequence: no rgb/depth pairs within tolerance in " + root.string());

  std::optional<Trajectory> gt;
  if (fs::exists(root / "groundtruth.txt")) gt = read_trajectory(root / "groundtruth.txt");

  Sequence seq;
  seq.dropped_rgb = rgb.size() - pairs.size();
  seq.dropped_depth = depth.size() - pairs.size();
  for (const auto& [i, j] : pairs) {
    FrameRecord f;
    f.timestamp = rgb[i].timestamp;
    f.depth_timestamp = depth[j].timestamp;
    f.rgb_path = root / rgb[i].path;
    f.depth_path = root / depth[j].path;
    if (gt && !gt->empty()) {
      try {
        f.gt_pose = pose_lookup(*gt, f.timestamp, assoc_tolerance);
      } catch (const DataError&) {
        // frame outside ground-truth coverage
      }
    }
    seq.frames.push_back(std::move(f));
  }
  std::sort(seq.frames.begin(), seq.frames.end(),
            [](const FrameRecord& x, const FrameRecord& y) { return x.timestamp < y.timestamp; });
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    if (!(seq.frames[k].timestamp > seq.frames[k - 1].timestamp)) {
      throw DataError("duplicate rgb timestamp in " + root.string());
    }
  }
  return seq;
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // rows packed; 16-bit samples in host order
};

bool host_little_endian() {
  const std::uint16_t probe = 1;
  return *reinterpret_cast<const std::uint8_t*>(&probe) == 1;
}

RawPng read_png_raw(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }
  RawPng out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": corrupt PNG data");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    bit_depth = 8;
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    bit_depth = 8;
  }
  if (bit_depth == 16 && host_little_endian()) png_set_swap(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.bytes.resize(row_bytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + row_bytes * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png_raw(const fs::path& path, int width, int height, int bit_depth, int color_type,
                   const std::vector<std::uint8_t>& bytes) {
  if (width <= 0 || height <= 0) throw ConfigError("cannot write an empty image to " + path.string());
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  const std::size_t row_bytes = bytes.size() / static_cast<std::size_t>(height);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(bytes.data() + row_bytes * static_cast<std::size_t>(y));
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16 && host_little_endian()) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Grid<std::uint16_t> read_png16(const fs::path& path) {
  const RawPng raw = read_png_raw(path);
  if (raw.bit_depth != 16 || raw.channels != 1) {
    throw FormatError(path.string() + ": expected a 16-bit single-channel PNG, got " + std::to_string(raw.bit_depth) +
                      "-bit with " + std::to_string(raw.channels) + " channel(s)");
  }
  Grid<std::uint16_t> out(raw.width, raw.height);
  std::memcpy(out.data().data(), raw.bytes.data(), out.size() * sizeof(std::uint16_t));
  return out;
}

void write_png16(const fs::path& path, const Grid<std::uint16_t>& counts) {
  std::vector<std::uint8_t> bytes(counts.size() * 2);
  std::memcpy(bytes.data(), counts.data().data(), bytes.size());
  write_png_raw(path, counts.width(), counts.height(), 16, PNG_COLOR_TYPE_GRAY, bytes);
}

DepthImage decode_depth(const Grid<std::uint16_t>& counts, double depth_scale) {
  if (!(depth_scale > 0.0)) throw ConfigError("depth_scale must be positive");
  DepthImage out(counts.width(), counts.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = counts[i] == 0 ? DepthImage::kInvalid : counts[i] / depth_scale;
  return out;
}

Grid<std::uint16_t> encode_depth(const DepthImage& depth, double depth_scale) {
  if (!(depth_scale > 0.0)) throw ConfigError("depth_scale must be positive");
  Grid<std::uint16_t> out(depth.width(), depth.height(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double c = std::round(depth[i] * depth_scale);
    out[i] = (depth[i] > 0.0 && c <= 65535.0) ? static_cast<std::uint16_t>(c) : 0;
  }
  return out;
}

DepthImage read_depth_png(const fs::path& path, double depth_scale) {
  return decode_depth(read_png16(path), depth_scale);
}

void write_depth_png(const fs::path& path, const DepthImage& depth, double depth_scale) {
  write_png16(path, encode_depth(depth, depth_scale));
}

RgbImage read_color_png(const fs::path& path) {
  const RawPng raw = read_png_raw(path);
  if (raw.bit_depth != 8 || raw.channels < 1 || raw.channels > 4) {
    throw FormatError(path.string() + ": expected an 8-bit color PNG, got " + std::to_string(raw.bit_depth) + "-bit");
  }
  RgbImage out(raw.width, raw.height);
  const int ch = raw.channels;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t* px = raw.bytes.data() + i * static_cast<std::size_t>(ch);
    if (ch <= 2) {
      const double g = px[0] / 255.0;
      out[i] = {g, g, g};
    } else {
      out[i] = {px[0] / 255.0, px[1] / 255.0, px[2] / 255.0};
    }
  }
  return out;
}

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

void write_color_png(const fs::path& path, const RgbImage& rgb) {
  std::vector<std::uint8_t> bytes(rgb.size() * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    for (int c = 0; c < 3; ++c) bytes[3 * i + c] = to_byte(rgb[i][c]);
  }
  write_png_raw(path, rgb.width(), rgb.height(), 8, PNG_COLOR_TYPE_RGB, bytes);
}

void write_gray_png(const fs::path& path, const IntensityImage& gray) {
  std::vector<std::uint8_t> bytes(gray.size());
  for (std::size_t i = 0; i < gray.size(); ++i) bytes[i] = to_byte(gray[i]);
  write_png_raw(path, gray.width(), gray.height(), 8, PNG_COLOR_TYPE_GRAY, bytes);
}

Mask read_mask_png(const fs::path& path) {
  const RawPng raw = read_png_raw(path);
  if (raw.bit_depth != 8 || raw.channels != 1) {
    throw FormatError(path.string() + ": expected an 8-bit single-channel mask PNG");
  }
  Mask out(raw.width, raw.height);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = raw.bytes[i] != 0;
  return out;
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask[i] != 0 ? 255 : 0;
  write_png_raw(path, mask.width(), mask.height(), 8, PNG_COLOR_TYPE_GRAY, bytes);
}

// ---------------------------------------------------------------------------
// Trajectories

Trajectory read_trajectory(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory " + path.string());
  Trajectory traj;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (tok.size() != 8) throw FormatError(where + ": expected 8 fields 'timestamp tx ty tz qx qy qz qw'");
    double v[8];
    for (int k = 0; k < 8; ++k) v[k] = parse_double(tok[k], path, line_no);
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (std::abs(q.norm() - 1.0) > 1e-3) throw FormatError(where + ": quaternion is not unit length");
    q.normalize();
    if (!traj.poses.empty() && !(v[0] > traj.poses.back().timestamp)) {
      throw FormatError(where + ": timestamps must be strictly increasing");
    }
    traj.poses.push_back({v[0], RigidTransform(q.toRotationMatrix(), Eigen::Vector3d(v[1], v[2], v[3]))});
  }
  return traj;
}

void write_trajectory(const Trajectory& traj, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "# timestamp tx ty tz qx qy qz qw\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : traj.poses) {
    Eigen::Quaterniond q(p.pose.R);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    out << p.timestamp << ' ' << p.pose.t.x() << ' ' << p.pose.t.y() << ' ' << p.pose.t.z() << ' ' << q.x() << ' '
        << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

RigidTransform pose_lookup(const Trajectory& traj, double t, double max_gap) {
  if (traj.empty()) throw DataError("no pose coverage: empty trajectory");
  const auto& poses = traj.poses;
  const auto it = std::lower_bound(poses.begin(), poses.end(), t,
                                   [](const TimedPose& p, double v) { return p.timestamp < v; });
  if (it != poses.end() && it->timestamp == t) return it->pose;
  if (it == poses.begin() || it == poses.end()) {
    const TimedPose& end = it == poses.begin() ? poses.front() : poses.back();
    if (std::abs(end.timestamp - t) > max_gap) {
      throw DataError("no pose coverage at t = " + std::to_string(t));
    }
    return end.pose;
  }
  const TimedPose& a = *(it - 1);
  const TimedPose& b = *it;
  if (std::min(t - a.timestamp, b.timestamp - t) > max_gap) {
    throw DataError("no pose coverage at t = " + std::to_string(t));
  }
  const double s = (t - a.timestamp) / (b.timestamp - a.timestamp);
  const Eigen::Quaterniond qa(a.pose.R), qb(b.pose.R);
  const Eigen::Quaterniond q = qa.slerp(s, qb).normalized();
  return {q.toRotationMatrix(), (1.0 - s) * a.pose.t + s * b.pose.t};
}

std::string format_timestamp(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

CameraIntrinsics read_intrinsics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open intrinsics file " + path.string());
  std::vector<std::string> all;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& t : tokens(line)) all.push_back(std::move(t));
  }
  if (all.size() != 6) throw FormatError(path.string() + ": expected 'fx fy cx cy width height'");
  CameraIntrinsics K;
  K.fx = parse_double(all[0], path, 0);
  K.fy = parse_double(all[1], path, 0);
  K.cx = parse_double(all[2], path, 0);
  K.cy = parse_double(all[3], path, 0);
  K.width = static_cast<int>(parse_double(all[4], path, 0));
  K.height = static_cast<int>(parse_double(all[5], path, 0));
  K.validate();
  return K;
}

void write_intrinsics(const fs::path& path, const CameraIntrinsics& K) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "# fx fy cx cy width height\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << K.fx << ' ' << K.fy << ' ' << K.cx << ' '
      << K.cy << ' ' << K.width << ' ' << K.height << '\n';
}

}  // namespace occdvo
