#pragma once

// Deterministic synthetic scenes: static points and lines, rigid movers with
// bounding-box masks, and camera paths named after the usual handheld RGB-D
// motions (xyz, rpy, half-sphere, static).
//
// Every random draw is keyed on (seed, frame, stream, id), so frames can be
// rendered in any order and still come out bit-identical.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fadslam/dynamic_filter.hpp"
#include "fadslam/error.hpp"
#include "fadslam/geometry.hpp"
#include "fadslam/lines.hpp"
#include "fadslam/metrics.hpp"

namespace fadslam {

enum class TrajectoryPattern { Xyz, Rpy, Half, Static };

inline const char* to_string(TrajectoryPattern p) {
  switch (p) {
    case TrajectoryPattern::Xyz: return "xyz";
    case TrajectoryPattern::Rpy: return "rpy";
    case TrajectoryPattern::Half: return "half";
    case TrajectoryPattern::Static: return "static";
  }
  return "xyz";
}

inline TrajectoryPattern parse_pattern(const std::string& s) {
  if (s == "xyz") return TrajectoryPattern::Xyz;
  if (s == "rpy") return TrajectoryPattern::Rpy;
  if (s == "half") return TrajectoryPattern::Half;
  if (s == "static") return TrajectoryPattern::Static;
  throw Error(Errc::InvalidConfig, "unknown trajectory pattern '" + s + "'");
}

/// Frames [first_frame, last_frame] lose every static point whose true
/// projection falls inside `region`, except the `keep` lowest ids.
struct TextureDegradation {
  Rect region;
  std::size_t first_frame = 0;
  std::size_t last_frame = 0;
  std::size_t keep = 0;
};

struct WorldConfig {
  std::uint64_t seed = 0;
  std::size_t n_static_points = 300;
  std::size_t n_static_lines = 40;
  std::size_t n_dynamic_objects = 0;
  std::size_t points_per_object = 40;
  std::size_t lines_per_object = 4;
  double scene_extent = 2.0;
  double dynamic_speed = 0.1;             // peak speed, units / frame
  double observation_noise_sigma = 0.0;   // px
  double response_noise_sigma = 0.02;     // relative edge-response noise
  double mask_dropout = 0.0;              // probability a mover's box is not emitted
  double min_line_length_px = 10.0;
  TrajectoryPattern trajectory_pattern = TrajectoryPattern::Xyz;
  std::size_t n_frames = 100;
  double frame_rate = 30.0;
  CameraIntrinsics camera{};
  std::vector<TextureDegradation> degradations;

  void validate() const {
    camera.validate();
    if (n_frames < 2) throw Error(Errc::InvalidConfig, "n_frames must be >= 2");
    if (!(observation_noise_sigma >= 0.0)) throw Error(Errc::InvalidConfig, "observation_noise_sigma must be >= 0");
    if (!(response_noise_sigma >= 0.0)) throw Error(Errc::InvalidConfig, "response_noise_sigma must be >= 0");
    if (!(scene_extent > 0.0)) throw Error(Errc::InvalidConfig, "scene_extent must be > 0");
    if (!(dynamic_speed >= 0.0)) throw Error(Errc::InvalidConfig, "dynamic_speed must be >= 0");
    if (!(mask_dropout >= 0.0 && mask_dropout <= 1.0)) throw Error(Errc::InvalidConfig, "mask_dropout must be in [0, 1]");
    if (!(frame_rate > 0.0)) throw Error(Errc::InvalidConfig, "frame_rate must be > 0");
  }
};

struct SimPoint {
  std::size_t id = 0;
  Vec3 position = Vec3::Zero();
};

struct SimLine {
  std::size_t id = 0;
  Line3D line;
  double response = 1.0;
};

/// Rigid cluster oscillating along `direction`; peak speed amplitude * omega.
struct DynamicObject {
  std::size_t id = 0;
  Vec3 center = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  std::vector<SimPoint> points;  // offsets from the centre
  std::vector<SimLine> lines;    // offsets from the centre

  Vec3 offset_at(std::size_t frame) const {
    return direction * (amplitude * std::sin(omega * static_cast<double>(frame) + phase));
  }
};

struct World {
  WorldConfig config;
  std::vector<Pose> trajectory;  // T_cw per frame
  std::vector<SimPoint> points;
  std::vector<SimLine> lines;
  std::vector<DynamicObject> objects;
};

struct SimPointObs {
  std::size_t id = 0;
  Vec2 pixel = Vec2::Zero();
  double depth = 0.0;
  bool dynamic = false;
};

struct SimLineObs {
  std::size_t id = 0;
  Line2D line;  // canonical endpoint order
  double start_depth = 0.0;
  double end_depth = 0.0;
  double response = 0.0;
  bool dynamic = false;
};

struct SimFrame {
  std::size_t index = 0;
  double timestamp = 0.0;
  Pose true_pose;  // T_cw
  std::vector<SimPointObs> points;
  std::vector<SimLineObs> lines;
  DynamicMask masks;               // emitted boxes
  std::vector<Rect> object_boxes;  // every visible mover, emitted or not
};

struct Sequence {
  CameraIntrinsics camera;
  std::vector<SimFrame> frames;
  Trajectory ground_truth;  // T_wc
};

namespace detail {

enum class Stream : std::uint64_t { PointNoise = 1, LineNoise = 2, Response = 3, MaskDropout = 4 };

inline std::mt19937_64 keyed_rng(std::uint64_t seed, std::uint64_t frame, Stream stream, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
  return std::mt19937_64(seq);
}

inline Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
inline Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
inline Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

}  // namespace detail

/// Centre and radius of the half-sphere path for a given scene extent.
inline Vec3 hemisphere_center(double extent) { return {0.0, 0.0, 1.75 * extent}; }
inline double hemisphere_radius(double extent) { return 1.75 * extent; }

/// Camera path as T_cw per frame.
inline std::vector<Pose> generate_trajectory(TrajectoryPattern pattern, std::size_t n_frames, double extent) {
  if (n_frames < 2) throw Error(Errc::InvalidConfig, "n_frames must be >= 2");
  constexpr double two_pi = 2.0 * M_PI;
  std::vector<Pose> out;
  out.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const double k = static_cast<double>(i);
    Pose t_wc;
    switch (pattern) {
      case TrajectoryPattern::Xyz: {
        const double a = 0.15 * extent;
        t_wc.translation = {a * std::sin(two_pi * k / 90.0), 0.6 * a * std::sin(two_pi * k / 70.0 + 0.5),
                            0.5 * a * std::sin(two_pi * k / 110.0)};
        break;
      }
      case TrajectoryPattern::Rpy:
        t_wc.rotation = detail::rot_z(0.10 * std::sin(two_pi * k / 80.0)) *
                        detail::rot_y(0.15 * std::sin(two_pi * k / 100.0)) *
                        detail::rot_x(0.10 * std::sin(two_pi * k / 60.0));
        break;
      case TrajectoryPattern::Half: {
        const Vec3 c = hemisphere_center(extent);
        const double r = hemisphere_radius(extent);
        const double az = 0.35 * std::sin(two_pi * k / 120.0);
        const double el = 0.12 * std::sin(two_pi * k / 90.0);
        const Vec3 pos = c + r * Vec3(std::sin(az) * std::cos(el), std::sin(el), -std::cos(az) * std::cos(el));
        const Vec3 z = (c - pos).normalized();
        const Vec3 x = Vec3::UnitY().cross(z).normalized();
        const Vec3 y = z.cross(x);
        t_wc.rotation.col(0) = x;
        t_wc.rotation.col(1) = y;
        t_wc.rotation.col(2) = z;
        t_wc.translation = pos;
        break;
      }
      case TrajectoryPattern::Static:
        t_wc.translation = 2e-5 * Vec3(std::sin(1.3 * k), std::sin(2.1 * k + 1.0), std::sin(0.7 * k + 2.0));
        break;
    }
    out.push_back(t_wc.inverse());
  }
  return out;
}

/// Seeded scene. Landmark coordinates are unit-scene draws scaled by scene_extent.
inline World generate_world(const WorldConfig& config) {
  config.validate();
  World w;
  w.config = config;
  w.trajectory = generate_trajectory(config.trajectory_pattern, config.n_frames, config.scene_extent);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double e = config.scene_extent;
  auto in_range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto scene_point = [&]() {
    const double z = in_range(1.0, 2.5);
    return Vec3(in_range(-0.8, 0.8) * z, in_range(-0.6, 0.6) * z, z);
  };
  auto unit_dir = [&]() {
    Vec3 d(in_range(-1.0, 1.0), in_range(-1.0, 1.0), in_range(-0.5, 0.5));
    if (d.norm() < 1e-6) d = Vec3::UnitX();
    return d.normalized();
  };

  std::size_t next_point = 0;
  std::size_t next_line = 0;
  for (std::size_t i = 0; i < config.n_static_points; ++i) w.points.push_back({next_point++, e * scene_point()});
  for (std::size_t i = 0; i < config.n_static_lines; ++i) {
    const Vec3 mid = scene_point();
    const Vec3 dir = unit_dir();
    const double half = 0.5 * in_range(0.3, 0.8);
    const double response = in_range(0.5, 2.0);
    w.lines.push_back({next_line++, {e * (mid - half * dir), e * (mid + half * dir)}, response});
  }

  for (std::size_t o = 0; o < config.n_dynamic_objects; ++o) {
    DynamicObject obj;
    obj.id = o;
    const double z = in_range(1.3, 2.0);
    obj.center = e * Vec3(in_range(-0.35, 0.35) * z, in_range(-0.2, 0.2) * z, z);
    const double heading = in_range(-0.6, 0.6);
    obj.direction = Vec3(std::cos(heading), 0.0, 0.5 * std::sin(heading)).normalized();
    obj.omega = 2.0 * M_PI / in_range(36.0, 48.0);
    obj.amplitude = config.dynamic_speed / obj.omega;
    obj.phase = in_range(0.0, 2.0 * M_PI);
    const Vec3 half_size = e * Vec3(0.12, 0.22, 0.08);
    auto body_point = [&]() {
      return Vec3(in_range(-1.0, 1.0) * half_size.x(), in_range(-1.0, 1.0) * half_size.y(),
                  in_range(-1.0, 1.0) * half_size.z());
    };
    for (std::size_t i = 0; i < config.points_per_object; ++i) obj.points.push_back({next_point++, body_point()});
    for (std::size_t i = 0; i < config.lines_per_object; ++i) {
      const Vec3 a = body_point();
      Vec3 b = body_point();
      if ((b - a).norm() < 0.2 * half_size.norm()) b = -a;
      obj.lines.push_back({next_line++, {a, b}, in_range(0.5, 2.0)});
    }
    w.objects.push_back(std::move(obj));
  }
  return w;
}

/// Copy of `world` with one more texture-degradation window.
inline World degrade_texture(const World& world, const TextureDegradation& window) {
  World out = world;
  if (window.region.empty()) return out;
  out.config.degradations.push_back(window);
  return out;
}

namespace detail {

inline bool in_image(const CameraIntrinsics& k, const Vec2& px) {
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() < k.width && px.y() < k.height;
}

struct ProjectedPoint {
  Vec2 pixel;
  double depth;
};

inline std::optional<ProjectedPoint> visible_point(const CameraIntrinsics& k, const Pose& t_cw, const Vec3& p_w) {
  const Vec3 pc = t_cw * p_w;
  if (!(pc.z() > 0.1)) return std::nullopt;
  const Vec2 px = project_camera(k, pc);
  if (!in_image(k, px)) return std::nullopt;
  return ProjectedPoint{px, pc.z()};
}

inline Vec2 gaussian2(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return Vec2::Zero();
  std::normal_distribution<double> n(0.0, sigma);
  const double u = n(rng);
  const double v = n(rng);
  return {u, v};
}

}  // namespace detail

/// Renders frame `frame` of `world` from camera pose `t_cw`.
inline SimFrame render_frame(const World& world, std::size_t frame, const Pose& t_cw) {
  const WorldConfig& cfg = world.config;
  const CameraIntrinsics& k = cfg.camera;
  SimFrame out;
  out.index = frame;
  out.timestamp = static_cast<double>(frame) / cfg.frame_rate;
  out.true_pose = t_cw;

  auto add_point = [&](std::size_t id, const Vec3& p_w, bool dynamic) -> const SimPointObs* {
    const auto vis = detail::visible_point(k, t_cw, p_w);
    if (!vis) return nullptr;
    auto rng = detail::keyed_rng(cfg.seed, frame, detail::Stream::PointNoise, id);
    const Vec2 px = vis->pixel + detail::gaussian2(rng, cfg.observation_noise_sigma);
    if (!detail::in_image(k, px)) return nullptr;
    out.points.push_back({id, px, vis->depth, dynamic});
    return &out.points.back();
  };

  auto add_line = [&](const SimLine& l, const Line3D& l_w, bool dynamic) -> bool {
    const auto vs = detail::visible_point(k, t_cw, l_w.start);
    const auto ve = detail::visible_point(k, t_cw, l_w.end);
    if (!vs || !ve) return false;
    if ((ve->pixel - vs->pixel).norm() < cfg.min_line_length_px) return false;
    auto rng = detail::keyed_rng(cfg.seed, frame, detail::Stream::LineNoise, l.id);
    const Vec2 s = vs->pixel + detail::gaussian2(rng, cfg.observation_noise_sigma);
    const Vec2 e = ve->pixel + detail::gaussian2(rng, cfg.observation_noise_sigma);
    if (!detail::in_image(k, s) || !detail::in_image(k, e)) return false;
    auto rrng = detail::keyed_rng(cfg.seed, frame, detail::Stream::Response, l.id);
    std::normal_distribution<double> rn(0.0, cfg.response_noise_sigma);
    const double response =
        std::max(0.0, l.response * (1.0 + (cfg.response_noise_sigma > 0.0 ? rn(rrng) : 0.0)));
    SimLineObs obs{l.id, {s, e}, vs->depth, ve->depth, response, dynamic};
    const Line2D canon = canonicalize(obs.line);
    if (canon.start != obs.line.start) std::swap(obs.start_depth, obs.end_depth);
    obs.line = canon;
    out.lines.push_back(obs);
    return true;
  };

  // Static points, minus any degraded region.
  std::vector<const TextureDegradation*> active;
  for (const auto& d : cfg.degradations)
    if (frame >= d.first_frame && frame <= d.last_frame) active.push_back(&d);
  std::vector<std::size_t> kept_in_region(active.size(), 0);
  for (const SimPoint& p : world.points) {
    bool suppressed = false;
    if (!active.empty()) {
      const auto vis = detail::visible_point(k, t_cw, p.position);
      if (vis) {
        for (std::size_t a = 0; a < active.size(); ++a) {
          if (!active[a]->region.contains(vis->pixel)) continue;
          if (kept_in_region[a] < active[a]->keep) {
            ++kept_in_region[a];
          } else {
            suppressed = true;
          }
        }
      }
    }
    if (!suppressed) add_point(p.id, p.position, false);
  }
  for (const SimLine& l : world.lines) add_line(l, l.line, false);

  for (const DynamicObject& obj : world.objects) {
    const Vec3 c = obj.center + obj.offset_at(frame);
    Rect box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    auto grow = [&](const Vec2& px) {
      box.umin = std::min(box.umin, px.x());
      box.vmin = std::min(box.vmin, px.y());
      box.umax = std::max(box.umax, px.x());
      box.vmax = std::max(box.vmax, px.y());
    };
    bool any = false;
    for (const SimPoint& p : obj.points) {
      if (const SimPointObs* o = add_point(p.id, c + p.position, true)) {
        grow(o->pixel);
        any = true;
      }
    }
    for (const SimLine& l : obj.lines) {
      if (add_line(l, {c + l.line.start, c + l.line.end}, true)) {
        grow(out.lines.back().line.start);
        grow(out.lines.back().line.end);
        any = true;
      }
    }
    if (!any) continue;
    out.object_boxes.push_back(box);
    bool emit = true;
    if (cfg.mask_dropout > 0.0) {
      auto rng = detail::keyed_rng(cfg.seed, frame, detail::Stream::MaskDropout, obj.id);
      emit = std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= cfg.mask_dropout;
    }
    if (emit) out.masks.regions.push_back(box);
  }
  return out;
}

inline SimFrame render_frame(const World& world, std::size_t frame) {
  return render_frame(world, frame, world.trajectory.at(frame));
}

inline Trajectory ground_truth_trajectory(const World& world) {
  Trajectory t;
  for (std::size_t i = 0; i < world.trajectory.size(); ++i)
    t.entries.push_back({static_cast<double>(i) / world.config.frame_rate, world.trajectory[i].inverse()});
  return t;
}

inline Sequence render_sequence(const World& world) {
  Sequence seq;
  seq.camera = world.config.camera;
  seq.frames.reserve(world.trajectory.size());
  for (std::size_t i = 0; i < world.trajectory.size(); ++i) seq.frames.push_back(render_frame(world, i));
  seq.ground_truth = ground_truth_trajectory(world);
  return seq;
}

}  // namespace fadslam
