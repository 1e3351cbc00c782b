#pragma once

// Two-stage dynamic feature removal. Stage 1 drops features inside dynamic
// object rectangles; stage 2 drops matched features that stray from their
// epipolar line. A line goes when three or more of its five samples fail.

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fadslam/geometry.hpp"
#include "fadslam/instrumentation.hpp"
#include "fadslam/lines.hpp"

namespace fadslam {

inline constexpr double kDefaultEpipolarThresholdPx = 1.0;
inline constexpr int kLineVoteCount = 3;

struct Rect {
  double umin = 0.0;
  double vmin = 0.0;
  double umax = 0.0;
  double vmax = 0.0;

  bool contains(const Vec2& p) const {
    return p.x() >= umin && p.x() <= umax && p.y() >= vmin && p.y() <= vmax;
  }

  bool empty() const { return !(umax >= umin && vmax >= vmin); }
};

struct DynamicMask {
  std::vector<Rect> regions;

  bool contains(const Vec2& p) const {
    for (const Rect& r : regions)
      if (r.contains(p)) return true;
    return false;
  }
};

/// Index partition of a filtered feature list. `epipolar_tested` records the
/// features that reached stage 2 with a match; it never overlaps the mask set.
struct FilterOutcome {
  std::vector<std::size_t> retained;
  std::vector<std::size_t> removed_by_mask;
  std::vector<std::size_t> removed_by_epipolar;
  std::vector<std::size_t> epipolar_tested;

  std::size_t size() const {
    return retained.size() + removed_by_mask.size() + removed_by_epipolar.size();
  }
};

inline FilterOutcome mask_filter_points(std::span<const Vec2> points, const DynamicMask& mask) {
  FilterOutcome out;
  for (std::size_t i = 0; i < points.size(); ++i)
    (mask.contains(points[i]) ? out.removed_by_mask : out.retained).push_back(i);
  return out;
}

inline int samples_inside(const Line2D& line, const DynamicMask& mask) {
  int inside = 0;
  for (const Vec2& s : line.samples())
    if (mask.contains(s)) ++inside;
  return inside;
}

inline FilterOutcome mask_filter_lines(std::span<const Line2D> lines, const DynamicMask& mask) {
  FilterOutcome out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    ++work_counters().line_ops;
    (samples_inside(lines[i], mask) >= kLineVoteCount ? out.removed_by_mask : out.retained).push_back(i);
  }
  return out;
}

/// Distance of x_j from the epipolar line of x_i; nullopt at the epipole.
inline std::optional<double> epipolar_distance(const Mat3& f, const Vec2& x_i, const Vec2& x_j) {
  try {
    return point_line_distance(epipolar_line(f, x_i), x_j);
  } catch (const Error&) {
    return std::nullopt;
  }
}

struct PointPair {
  Vec2 x_i;  // earlier frame
  Vec2 x_j;  // current frame
};

inline FilterOutcome epipolar_filter_points(std::span<const PointPair> matches, const Mat3& f,
                                            double d_th = kDefaultEpipolarThresholdPx) {
  FilterOutcome out;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    out.epipolar_tested.push_back(i);
    const auto d = epipolar_distance(f, matches[i].x_i, matches[i].x_j);
    (d && *d > d_th ? out.removed_by_epipolar : out.retained).push_back(i);
  }
  return out;
}

struct LinePair {
  Line2D line_i;
  Line2D line_j;
};

/// Number of corresponding sample pairs whose epipolar distance exceeds d_th.
inline int epipolar_violations(const LinePair& pair, const Mat3& f, double d_th) {
  const auto si = pair.line_i.samples();
  const auto sj = pair.line_j.samples();
  int violations = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto d = epipolar_distance(f, si[k], sj[k]);
    if (d && *d > d_th) ++violations;
  }
  return violations;
}

inline FilterOutcome epipolar_filter_lines(std::span<const LinePair> matches, const Mat3& f,
                                           double d_th = kDefaultEpipolarThresholdPx) {
  FilterOutcome out;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    ++work_counters().line_ops;
    out.epipolar_tested.push_back(i);
    (epipolar_violations(matches[i], f, d_th) >= kLineVoteCount ? out.removed_by_epipolar : out.retained)
        .push_back(i);
  }
  return out;
}

/// Current-frame features plus, where a match exists, their earlier-frame
/// counterpart.
struct RemovalInput {
  std::span<const Vec2> points;
  std::span<const std::optional<Vec2>> previous_points;  // empty, or one entry per point
  std::span<const Line2D> lines;
  std::span<const std::optional<Line2D>> previous_lines;  // empty, or one entry per line
};

struct RemovalResult {
  FilterOutcome points;
  FilterOutcome lines;
};

/// Stage 1 then stage 2. Without a fundamental matrix (degenerate baseline)
/// only stage 1 runs. Unmatched features survive stage 2.
inline RemovalResult run_removal(const RemovalInput& in, const DynamicMask& mask,
                                 const std::optional<Mat3>& f,
                                 double d_th = kDefaultEpipolarThresholdPx) {
  RemovalResult result;

  const FilterOutcome point_mask = mask_filter_points(in.points, mask);
  result.points.removed_by_mask = point_mask.removed_by_mask;
  std::vector<PointPair> point_pairs;
  std::vector<std::size_t> point_pair_index;
  for (std::size_t idx : point_mask.retained) {
    if (f && idx < in.previous_points.size() && in.previous_points[idx]) {
      point_pairs.push_back({*in.previous_points[idx], in.points[idx]});
      point_pair_index.push_back(idx);
    } else {
      result.points.retained.push_back(idx);
    }
  }
  if (f) {
    const FilterOutcome epi = epipolar_filter_points(point_pairs, *f, d_th);
    for (std::size_t k : epi.epipolar_tested) result.points.epipolar_tested.push_back(point_pair_index[k]);
    for (std::size_t k : epi.retained) result.points.retained.push_back(point_pair_index[k]);
    for (std::size_t k : epi.removed_by_epipolar) result.points.removed_by_epipolar.push_back(point_pair_index[k]);
  }

  if (!in.lines.empty()) {
    const FilterOutcome line_mask = mask_filter_lines(in.lines, mask);
    result.lines.removed_by_mask = line_mask.removed_by_mask;
    std::vector<LinePair> line_pairs;
    std::vector<std::size_t> line_pair_index;
    for (std::size_t idx : line_mask.retained) {
      if (f && idx < in.previous_lines.size() && in.previous_lines[idx]) {
        line_pairs.push_back({*in.previous_lines[idx], in.lines[idx]});
        line_pair_index.push_back(idx);
      } else {
        result.lines.retained.push_back(idx);
      }
    }
    if (f) {
      const FilterOutcome epi = epipolar_filter_lines(line_pairs, *f, d_th);
      for (std::size_t k : epi.epipolar_tested) result.lines.epipolar_tested.push_back(line_pair_index[k]);
      for (std::size_t k : epi.retained) result.lines.retained.push_back(line_pair_index[k]);
      for (std::size_t k : epi.removed_by_epipolar) result.lines.removed_by_epipolar.push_back(line_pair_index[k]);
    }
  }

  for (FilterOutcome* o : {&result.points, &result.lines}) {
    std::sort(o->retained.begin(), o->retained.end());
    std::sort(o->removed_by_epipolar.begin(), o->removed_by_epipolar.end());
    std::sort(o->epipolar_tested.begin(), o->epipolar_tested.end());
  }
  return result;
}

}  // namespace fadslam
