#pragma once

// Flat `key = value` configuration shared by every command.
//
// One schema covers both the simulator and the pipeline; a command reads the
// keys it needs and leaves the rest at their defaults. Unknown keys, repeated
// keys and malformed values are errors that name the key. `#` starts a comment.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fadslam/error.hpp"
#include "fadslam/pipeline.hpp"
#include "fadslam/sim_world.hpp"

namespace fadslam {

struct Settings {
  WorldConfig world{};
  PipelineConfig pipeline{};
  std::set<std::string> present;  // keys given explicitly

  bool has(const std::string& key) const { return present.count(key) != 0; }
};

/// Error whose message names the offending key.
inline Error config_error(const std::string& key, const std::string& why) {
  return Error(Errc::InvalidConfig, "config key '" + key + "': " + why);
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw config_error(key, "expected a number, got '" + v + "'");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw config_error(key, "expected an integer, got '" + v + "'");
  return out;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
  const long long n = parse_int(key, v);
  if (n < 0) throw config_error(key, "must be >= 0");
  return static_cast<std::size_t>(n);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw config_error(key, "expected an unsigned integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw config_error(key, "expected true or false, got '" + v + "'");
}

// Shortest text that reads back to the same double.
inline std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt(bool v) { return v ? "true" : "false"; }

// `umin vmin umax vmax first last keep`, windows separated by ';'.
inline std::vector<TextureDegradation> parse_degradations(const std::string& key, const std::string& v) {
  std::vector<TextureDegradation> out;
  std::stringstream all(v);
  std::string item;
  while (std::getline(all, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream ss(item);
    std::string tok[7];
    for (auto& t : tok)
      if (!(ss >> t)) throw config_error(key, "expected 'umin vmin umax vmax first last keep'");
    std::string extra;
    if (ss >> extra) throw config_error(key, "trailing field '" + extra + "'");
    TextureDegradation d;
    d.region = {parse_double(key, tok[0]), parse_double(key, tok[1]), parse_double(key, tok[2]),
                parse_double(key, tok[3])};
    d.first_frame = parse_count(key, tok[4]);
    d.last_frame = parse_count(key, tok[5]);
    d.keep = parse_count(key, tok[6]);
    if (d.last_frame < d.first_frame) throw config_error(key, "last frame before first frame");
    out.push_back(d);
  }
  return out;
}

inline std::string format_degradations(const std::vector<TextureDegradation>& ds) {
  std::string out;
  for (const auto& d : ds) {
    if (!out.empty()) out += "; ";
    out += fmt(d.region.umin) + ' ' + fmt(d.region.vmin) + ' ' + fmt(d.region.umax) + ' ' + fmt(d.region.vmax) + ' ' +
           std::to_string(d.first_frame) + ' ' + std::to_string(d.last_frame) + ' ' + std::to_string(d.keep);
  }
  return out;
}

}  // namespace detail

struct KeySpec {
  std::string name;
  std::string section;  // "simulation" or "pipeline"
  std::string doc;
  std::function<void(Settings&, const std::string&)> set;
  std::function<std::string(const Settings&)> get;
};

inline const std::vector<KeySpec>& config_schema() {
  using namespace detail;
  static const std::vector<KeySpec> schema = [] {
    std::vector<KeySpec> s;
    auto fmt_count = [](std::size_t v) { return std::to_string(v); };
    auto fmt_int = [](int v) { return std::to_string(v); };
    auto fmt_u64 = [](std::uint64_t v) { return std::to_string(v); };
    auto fmt_d = [](double v) { return fmt(v); };
    auto fmt_b = [](bool v) { return fmt(v); };
    auto parse_i = [](const std::string& k, const std::string& v) { return static_cast<int>(parse_int(k, v)); };

    // simulation
    s.push_back({"seed", "simulation", "RNG seed (required by simulate)",
                 [](Settings& c, const std::string& v) { c.world.seed = parse_u64("seed", v); },
                 [fmt_u64](const Settings& c) { return fmt_u64(c.world.seed); }});
    s.push_back({"n_frames", "simulation", "number of frames",
                 [](Settings& c, const std::string& v) { c.world.n_frames = parse_count("n_frames", v); },
                 [fmt_count](const Settings& c) { return fmt_count(c.world.n_frames); }});
    s.push_back({"pattern", "simulation", "camera motion: xyz | rpy | half | static",
                 [](Settings& c, const std::string& v) {
                   try {
                     c.world.trajectory_pattern = parse_pattern(v);
                   } catch (const Error&) {
                     throw config_error("pattern", "expected xyz, rpy, half or static, got '" + v + "'");
                   }
                 },
                 [](const Settings& c) { return std::string(to_string(c.world.trajectory_pattern)); }});
    s.push_back({"frame_rate", "simulation", "frames per second (timestamps)",
                 [](Settings& c, const std::string& v) { c.world.frame_rate = parse_double("frame_rate", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.frame_rate); }});
    s.push_back({"n_static_points", "simulation", "static map points",
                 [](Settings& c, const std::string& v) { c.world.n_static_points = parse_count("n_static_points", v); },
                 [fmt_count](const Settings& c) { return fmt_count(c.world.n_static_points); }});
    s.push_back({"n_static_lines", "simulation", "static map lines",
                 [](Settings& c, const std::string& v) { c.world.n_static_lines = parse_count("n_static_lines", v); },
                 [fmt_count](const Settings& c) { return fmt_count(c.world.n_static_lines); }});
    s.push_back({"n_dynamic_objects", "simulation", "rigid moving objects",
                 [](Settings& c, const std::string& v) { c.world.n_dynamic_objects = parse_count("n_dynamic_objects", v); },
                 [fmt_count](const Settings& c) { return fmt_count(c.world.n_dynamic_objects); }});
    s.push_back({"points_per_object", "simulation", "points on each moving object",
                 [](Settings& c, const std::string& v) { c.world.points_per_object = parse_count("points_per_object", v); },
                 [fmt_count](const Settings& c) { return fmt_count(c.world.points_per_object); }});
    s.push_back({"lines_per_object", "simulation", "lines on each moving object",
                 [](Settings& c, const std::string& v) { c.world.lines_per_object = parse_count("lines_per_object", v); },
                 [fmt_count](const Settings& c) { return fmt_count(c.world.lines_per_object); }});
    s.push_back({"scene_extent", "simulation", "half-size of the landmark volume",
                 [](Settings& c, const std::string& v) { c.world.scene_extent = parse_double("scene_extent", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.scene_extent); }});
    s.push_back({"dynamic_speed", "simulation", "peak object speed, units per frame",
                 [](Settings& c, const std::string& v) { c.world.dynamic_speed = parse_double("dynamic_speed", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.dynamic_speed); }});
    s.push_back({"noise_sigma", "simulation", "pixel noise standard deviation",
                 [](Settings& c, const std::string& v) { c.world.observation_noise_sigma = parse_double("noise_sigma", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.observation_noise_sigma); }});
    s.push_back({"response_noise_sigma", "simulation", "relative noise on line responses",
                 [](Settings& c, const std::string& v) { c.world.response_noise_sigma = parse_double("response_noise_sigma", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.response_noise_sigma); }});
    s.push_back({"mask_dropout", "simulation", "probability a moving object's mask is missing",
                 [](Settings& c, const std::string& v) { c.world.mask_dropout = parse_double("mask_dropout", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.mask_dropout); }});
    s.push_back({"min_line_length_px", "simulation", "shortest rendered line",
                 [](Settings& c, const std::string& v) { c.world.min_line_length_px = parse_double("min_line_length_px", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.min_line_length_px); }});
    s.push_back({"degrade", "simulation", "texture removal windows: 'umin vmin umax vmax first last keep; ...'",
                 [](Settings& c, const std::string& v) { c.world.degradations = parse_degradations("degrade", v); },
                 [](const Settings& c) { return format_degradations(c.world.degradations); }});
    s.push_back({"camera_fx", "simulation", "focal length x, px",
                 [](Settings& c, const std::string& v) { c.world.camera.fx = parse_double("camera_fx", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.camera.fx); }});
    s.push_back({"camera_fy", "simulation", "focal length y, px",
                 [](Settings& c, const std::string& v) { c.world.camera.fy = parse_double("camera_fy", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.camera.fy); }});
    s.push_back({"camera_cx", "simulation", "principal point x, px",
                 [](Settings& c, const std::string& v) { c.world.camera.cx = parse_double("camera_cx", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.camera.cx); }});
    s.push_back({"camera_cy", "simulation", "principal point y, px",
                 [](Settings& c, const std::string& v) { c.world.camera.cy = parse_double("camera_cy", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.world.camera.cy); }});
    s.push_back({"camera_width", "simulation", "image width, px",
                 [parse_i](Settings& c, const std::string& v) { c.world.camera.width = parse_i("camera_width", v); },
                 [fmt_int](const Settings& c) { return fmt_int(c.world.camera.width); }});
    s.push_back({"camera_height", "simulation", "image height, px",
                 [parse_i](Settings& c, const std::string& v) { c.world.camera.height = parse_i("camera_height", v); },
                 [fmt_int](const Settings& c) { return fmt_int(c.world.camera.height); }});

    // pipeline
    s.push_back({"c_base", "pipeline", "base feature count per grid cell",
                 [](Settings& c, const std::string& v) { c.pipeline.awareness.c_base = parse_double("c_base", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.awareness.c_base); }});
    s.push_back({"th", "pipeline", "feature-quality threshold; Q >= th selects Point mode",
                 [](Settings& c, const std::string& v) { c.pipeline.awareness.th = parse_double("th", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.awareness.th); }});
    s.push_back({"grid_rows", "pipeline", "quality grid rows",
                 [parse_i](Settings& c, const std::string& v) { c.pipeline.awareness.grid_rows = parse_i("grid_rows", v); },
                 [fmt_int](const Settings& c) { return fmt_int(c.pipeline.awareness.grid_rows); }});
    s.push_back({"grid_cols", "pipeline", "quality grid columns",
                 [parse_i](Settings& c, const std::string& v) { c.pipeline.awareness.grid_cols = parse_i("grid_cols", v); },
                 [fmt_int](const Settings& c) { return fmt_int(c.pipeline.awareness.grid_cols); }});
    s.push_back({"d_th", "pipeline", "epipolar distance threshold, px (removal is strict: d > d_th)",
                 [](Settings& c, const std::string& v) { c.pipeline.d_th = parse_double("d_th", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.d_th); }});
    s.push_back({"line_max_dist", "pipeline", "largest accepted line descriptor distance",
                 [](Settings& c, const std::string& v) { c.pipeline.line_match.max_dist = parse_double("line_max_dist", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.line_match.max_dist); }});
    s.push_back({"line_ratio", "pipeline", "nearest / second-nearest ratio test",
                 [](Settings& c, const std::string& v) { c.pipeline.line_match.ratio = parse_double("line_ratio", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.line_match.ratio); }});
    s.push_back({"line_window_px", "pipeline", "projection search radius around the projected midpoint, px",
                 [](Settings& c, const std::string& v) { c.pipeline.line_match.window_px = parse_double("line_window_px", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.line_match.window_px); }});
    s.push_back({"line_w_length", "pipeline", "descriptor weight, length term",
                 [](Settings& c, const std::string& v) { c.pipeline.line_match.weights.length = parse_double("line_w_length", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.line_match.weights.length); }});
    s.push_back({"line_w_angle", "pipeline", "descriptor weight, angle term",
                 [](Settings& c, const std::string& v) { c.pipeline.line_match.weights.angle = parse_double("line_w_angle", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.line_match.weights.angle); }});
    s.push_back({"line_w_response", "pipeline", "descriptor weight, response term",
                 [](Settings& c, const std::string& v) { c.pipeline.line_match.weights.response = parse_double("line_w_response", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.line_match.weights.response); }});
    s.push_back({"huber_point_delta", "pipeline", "Huber threshold for point residuals, px",
                 [](Settings& c, const std::string& v) { c.pipeline.huber_point_delta = parse_double("huber_point_delta", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.huber_point_delta); }});
    s.push_back({"huber_line_delta", "pipeline", "Huber threshold for line residuals, px",
                 [](Settings& c, const std::string& v) { c.pipeline.huber_line_delta = parse_double("huber_line_delta", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.huber_line_delta); }});
    s.push_back({"line_weight", "pipeline", "weight of line terms in the cost",
                 [](Settings& c, const std::string& v) { c.pipeline.line_weight = parse_double("line_weight", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.line_weight); }});
    s.push_back({"max_iters", "pipeline", "LM iterations for pose and local BA",
                 [parse_i](Settings& c, const std::string& v) { c.pipeline.max_iters = parse_i("max_iters", v); },
                 [fmt_int](const Settings& c) { return fmt_int(c.pipeline.max_iters); }});
    s.push_back({"global_max_iters", "pipeline", "LM iterations for the final global refinement",
                 [parse_i](Settings& c, const std::string& v) { c.pipeline.global_max_iters = parse_i("global_max_iters", v); },
                 [fmt_int](const Settings& c) { return fmt_int(c.pipeline.global_max_iters); }});
    s.push_back({"tol", "pipeline", "LM convergence tolerance on the update norm",
                 [](Settings& c, const std::string& v) { c.pipeline.tol = parse_double("tol", v); },
                 [fmt_d](const Settings& c) { return fmt_d(c.pipeline.tol); }});
    s.push_back({"window_size", "pipeline", "keyframes in the local BA window",
                 [](Settings& c, const std::string& v) { c.pipeline.window_size = parse_count("window_size", v); },
                 [fmt_count](const Settings& c) { return fmt_count(c.pipeline.window_size); }});
    s.push_back({"keyframe_stride", "pipeline", "a keyframe every this many frames",
                 [](Settings& c, const std::string& v) { c.pipeline.keyframe_stride = parse_count("keyframe_stride", v); },
                 [fmt_count](const Settings& c) { return fmt_count(c.pipeline.keyframe_stride); }});
    s.push_back({"removal", "pipeline", "dynamic feature removal on/off",
                 [](Settings& c, const std::string& v) { c.pipeline.removal = parse_bool("removal", v); },
                 [fmt_b](const Settings& c) { return fmt_b(c.pipeline.removal); }});
    s.push_back({"mode", "pipeline", "line policy: auto | always | never",
                 [](Settings& c, const std::string& v) {
                   try {
                     c.pipeline.mode_policy = parse_mode_policy(v);
                   } catch (const Error&) {
                     throw config_error("mode", "expected auto, always or never, got '" + v + "'");
                   }
                 },
                 [](const Settings& c) { return std::string(to_string(c.pipeline.mode_policy)); }});
    s.push_back({"oracle_relocalize", "pipeline", "reset lost frames to the ground-truth pose",
                 [](Settings& c, const std::string& v) { c.pipeline.oracle_relocalize = parse_bool("oracle_relocalize", v); },
                 [fmt_b](const Settings& c) { return fmt_b(c.pipeline.oracle_relocalize); }});
    s.push_back({"init_from_ground_truth", "pipeline", "first pose from ground truth (else identity)",
                 [](Settings& c, const std::string& v) {
                   c.pipeline.init_from_ground_truth = parse_bool("init_from_ground_truth", v);
                 },
                 [fmt_b](const Settings& c) { return fmt_b(c.pipeline.init_from_ground_truth); }});
    return s;
  }();
  return schema;
}

inline const KeySpec* find_key(const std::string& name) {
  for (const KeySpec& k : config_schema())
    if (k.name == name) return &k;
  return nullptr;
}

/// Applies `key = value` lines on top of `base`.
inline Settings parse_config(std::istream& in, const std::string& source = "<config>", Settings base = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw Error(Errc::InvalidConfig, where + "expected 'key = value'");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    const KeySpec* spec = find_key(key);
    if (!spec) throw Error(Errc::InvalidConfig, where + "unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw Error(Errc::InvalidConfig, where + "config key '" + key + "' repeated");
    try {
      spec->set(base, value);
    } catch (const Error& e) {
      throw Error(Errc::InvalidConfig, where + e.what());
    }
    base.present.insert(key);
  }
  return base;
}

inline Settings parse_config_string(const std::string& text, const std::string& source = "<config>") {
  std::istringstream in(text);
  return parse_config(in, source);
}

inline Settings read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return parse_config(in, path);
}

/// Every key of the given sections, one per line, in schema order.
inline std::string format_config(const Settings& s, const std::vector<std::string>& sections = {"simulation", "pipeline"}) {
  std::string out;
  for (const std::string& section : sections) {
    out += "# " + section + "\n";
    for (const KeySpec& k : config_schema())
      if (k.section == section) out += k.name + " = " + k.get(s) + "\n";
  }
  return out;
}

/// Markdown table of the schema, for the docs.
inline std::string schema_markdown() {
  std::string out = "| key | section | default | meaning |\n|---|---|---|---|\n";
  const Settings defaults;
  for (const KeySpec& k : config_schema()) {
    std::string doc;
    for (char c : k.doc) doc += c == '|' ? std::string("\\|") : std::string(1, c);
    out += "| `" + k.name + "` | " + k.section + " | `" + k.get(defaults) + "` | " + doc + " |\n";
  }
  return out;
}

}  // namespace fadslam
