#pragma once

// Five-sample line segments, (length, angle, response) descriptors, ratio-test
// matching and projection-window association against map lines.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fadslam/error.hpp"
#include "fadslam/geometry.hpp"
#include "fadslam/instrumentation.hpp"

namespace fadslam {

inline constexpr double kMinSegmentLengthPx = 1.0;

/// Affine sample parameters: start, quarter, mid, three-quarter, end.
inline constexpr std::array<double, 5> kLineSampleParams = {0.0, 0.25, 0.5, 0.75, 1.0};

/// 3D segment. Interior samples are derived from the endpoints.
struct Line3D {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::UnitX();

  Vec3 at(double s) const { return (1.0 - s) * start + s * end; }
  Vec3 quarter1() const { return at(0.25); }
  Vec3 mid() const { return at(0.5); }
  Vec3 quarter2() const { return at(0.75); }

  std::array<Vec3, 5> samples() const {
    std::array<Vec3, 5> out;
    for (std::size_t k = 0; k < 5; ++k) out[k] = at(kLineSampleParams[k]);
    return out;
  }

  Line3D transformed(const Pose& t) const { return {t * start, t * end}; }
};

/// Image segment. Interior samples are derived from the endpoints.
struct Line2D {
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::UnitX();

  Vec2 at(double s) const { return (1.0 - s) * start + s * end; }
  Vec2 quarter1() const { return at(0.25); }
  Vec2 mid() const { return at(0.5); }
  Vec2 quarter2() const { return at(0.75); }
  double length() const { return (end - start).norm(); }

  std::array<Vec2, 5> samples() const {
    std::array<Vec2, 5> out;
    for (std::size_t k = 0; k < 5; ++k) out[k] = at(kLineSampleParams[k]);
    return out;
  }

  Line2D reversed() const { return {end, start}; }
};

inline Line2D sample_line(const Vec2& s, const Vec2& e) {
  ++work_counters().line_ops;
  if (!((e - s).norm() >= kMinSegmentLengthPx))
    throw Error(Errc::DegenerateSegment, "segment shorter than 1 px");
  return {s, e};
}

/// Lexicographic (u, then v) endpoint order, so detector output order does not matter.
inline Line2D canonicalize(const Line2D& l) {
  const bool swap = l.end.x() < l.start.x() || (l.end.x() == l.start.x() && l.end.y() < l.start.y());
  return swap ? l.reversed() : l;
}

/// Orients `obs` so its endpoints pair with the nearer endpoints of `ref`.
inline Line2D orient_like(const Line2D& obs, const Line2D& ref) {
  const double keep = (obs.start - ref.start).norm() + (obs.end - ref.end).norm();
  const double flip = (obs.start - ref.end).norm() + (obs.end - ref.start).norm();
  return flip < keep ? obs.reversed() : obs;
}

struct LineDescriptor {
  double length = 0.0;    // px
  double angle = 0.0;     // rad, [0, pi)
  double response = 0.0;  // edge strength, >= 0
};

inline double fold_angle(double a) {
  double f = std::fmod(a, M_PI);
  if (f < 0.0) f += M_PI;
  if (f >= M_PI) f = 0.0;
  return f;
}

inline LineDescriptor make_descriptor(const Line2D& line, double response) {
  ++work_counters().line_ops;
  const Vec2 d = line.end - line.start;
  return {d.norm(), fold_angle(std::atan2(d.y(), d.x())), std::max(response, 0.0)};
}

struct DescriptorWeights {
  double length = 1.0;
  double angle = 1.0;
  double response = 1.0;
};

/// Undirected angular difference in [0, pi/2].
inline double angle_difference(double a, double b) {
  const double d = std::abs(fold_angle(a) - fold_angle(b));
  return std::min(d, M_PI - d);
}

/// Weighted sum of three [0, 1]-scaled differences. Symmetric, zero on identical input.
inline double descriptor_distance(const LineDescriptor& a, const LineDescriptor& b,
                                  const DescriptorWeights& w = {}) {
  ++work_counters().line_ops;
  const double max_len = std::max(a.length, b.length);
  const double len_term = max_len > 0.0 ? std::abs(a.length - b.length) / max_len : 0.0;
  const double ang_term = angle_difference(a.angle, b.angle) / (M_PI / 2.0);
  const double resp_term = std::abs(a.response - b.response) / std::max({a.response, b.response, 1.0});
  return w.length * len_term + w.angle * ang_term + w.response * resp_term;
}

struct LineMatch {
  std::size_t index_i = 0;
  std::size_t index_j = 0;
  double distance = 0.0;
};

struct LineMatchParams {
  double max_dist = 0.25;
  double ratio = 0.7;
  double window_px = 20.0;
  DescriptorWeights weights{};
};

namespace detail {

struct Nearest {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_dist = std::numeric_limits<double>::infinity();
  double second_dist = std::numeric_limits<double>::infinity();
  std::size_t candidates = 0;

  void offer(std::size_t j, double d) {
    ++candidates;
    if (d < best_dist) {
      second_dist = best_dist;
      best_dist = d;
      best = j;
    } else if (d < second_dist) {
      second_dist = d;
    }
  }

  bool accepted(double max_dist, double ratio) const {
    if (candidates == 0 || !(best_dist < max_dist)) return false;
    return candidates == 1 || best_dist < ratio * second_dist;
  }
};

/// Keeps, for every j, only the accepted match with the smallest distance
/// (ties go to the lower i). Output is ordered by i.
inline std::vector<LineMatch> enforce_one_to_one(std::vector<LineMatch> matches) {
  std::vector<LineMatch> out;
  for (const LineMatch& m : matches) {
    bool dominated = false;
    for (const LineMatch& o : matches) {
      if (o.index_j != m.index_j || o.index_i == m.index_i) continue;
      if (o.distance < m.distance || (o.distance == m.distance && o.index_i < m.index_i)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(m);
  }
  return out;
}

}  // namespace detail

/// Nearest-neighbour matching with absolute and ratio thresholds, reduced to
/// mutual best matches.
inline std::vector<LineMatch> match_lines(std::span<const LineDescriptor> set_i,
                                          std::span<const LineDescriptor> set_j,
                                          double max_dist = 0.25, double ratio = 0.7,
                                          const DescriptorWeights& w = {}) {
  if (set_i.empty() || set_j.empty()) return {};
  std::vector<double> dist(set_i.size() * set_j.size());
  for (std::size_t i = 0; i < set_i.size(); ++i)
    for (std::size_t j = 0; j < set_j.size(); ++j)
      dist[i * set_j.size() + j] = descriptor_distance(set_i[i], set_j[j], w);

  std::vector<std::size_t> best_i_for_j(set_j.size());
  for (std::size_t j = 0; j < set_j.size(); ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < set_i.size(); ++i)
      if (dist[i * set_j.size() + j] < dist[best * set_j.size() + j]) best = i;
    best_i_for_j[j] = best;
  }

  std::vector<LineMatch> out;
  for (std::size_t i = 0; i < set_i.size(); ++i) {
    detail::Nearest nn;
    for (std::size_t j = 0; j < set_j.size(); ++j) nn.offer(j, dist[i * set_j.size() + j]);
    if (!nn.accepted(max_dist, ratio)) continue;
    if (best_i_for_j[nn.best] != i) continue;
    out.push_back({i, nn.best, nn.best_dist});
  }
  return out;
}

/// Projects the endpoints of a map line. Every one of the five samples must be
/// in front of the camera.
inline Line2D project_line(const CameraIntrinsics& k, const Pose& t_cw, const Line3D& line) {
  ++work_counters().line_ops;
  const Line3D lc = line.transformed(t_cw);
  int behind = 0;
  for (const Vec3& p : lc.samples())
    if (!(p.z() > kMinProjectionDepth)) ++behind;
  if (behind == 5) throw Error(Errc::NonPositiveDepth, "line entirely behind camera");
  if (behind > 0) throw Error(Errc::PartiallyBehindCamera, "line crosses the camera plane");
  return {project_camera(k, lc.start), project_camera(k, lc.end)};
}

/// Individually projected samples; collinear, but not evenly spaced under perspective.
inline std::array<Vec2, 5> project_line_samples(const CameraIntrinsics& k, const Pose& t_cw,
                                                const Line3D& line) {
  ++work_counters().line_ops;
  std::array<Vec2, 5> out;
  const auto samples = line.samples();
  for (std::size_t s = 0; s < 5; ++s) out[s] = project(k, t_cw, samples[s]);
  return out;
}

struct MapLineView {
  Line3D line;
  LineDescriptor descriptor;
};

struct FrameLineView {
  Line2D line;
  LineDescriptor descriptor;
};

/// Associates map lines with frame lines. A map line is projected with
/// `t_cw`; frame lines whose midpoint lies within the window of the projected
/// midpoint are its candidates. The map-side descriptor takes length and angle
/// from the projection (they are view dependent) and the stored response.
/// Returned matches use index_i for the map line and index_j for the frame line.
inline std::vector<LineMatch> search_projection_match(std::span<const MapLineView> map_lines,
                                                      std::span<const FrameLineView> frame_lines,
                                                      const CameraIntrinsics& k, const Pose& t_cw,
                                                      const LineMatchParams& params = {}) {
  if (!(params.window_px > 0.0)) throw Error(Errc::InvalidConfig, "search window must be positive");
  std::vector<LineMatch> accepted;
  for (std::size_t i = 0; i < map_lines.size(); ++i) {
    Line2D projected;
    try {
      projected = project_line(k, t_cw, map_lines[i].line);
    } catch (const Error&) {
      continue;
    }
    if (projected.length() < kMinSegmentLengthPx) continue;
    LineDescriptor predicted = make_descriptor(projected, map_lines[i].descriptor.response);
    const Vec2 mid = projected.mid();

    detail::Nearest nn;
    for (std::size_t j = 0; j < frame_lines.size(); ++j) {
      if ((frame_lines[j].line.mid() - mid).norm() > params.window_px) continue;
      nn.offer(j, descriptor_distance(predicted, frame_lines[j].descriptor, params.weights));
    }
    if (nn.accepted(params.max_dist, params.ratio)) accepted.push_back({i, nn.best, nn.best_dist});
  }
  return detail::enforce_one_to_one(std::move(accepted));
}

}  // namespace fadslam
