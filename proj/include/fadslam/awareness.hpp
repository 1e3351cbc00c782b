#pragma once

// Post-removal point sufficiency score and the Point / Point-Line decision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fadslam/error.hpp"
#include "fadslam/geometry.hpp"

namespace fadslam {

struct GridStats {
  int rows = 3;
  int cols = 3;
  std::vector<std::size_t> cell_count;  // row-major
  std::vector<double> cell_variance;    // cell-normalized, 0 for cells with < 2 points

  std::size_t cells() const { return cell_count.size(); }

  std::size_t total() const {
    std::size_t n = 0;
    for (std::size_t c : cell_count) n += c;
    return n;
  }

  double mean_count() const {
    return cells() == 0 ? 0.0 : static_cast<double>(total()) / static_cast<double>(cells());
  }
};

struct AwarenessConfig {
  double c_base = 10.0;
  double th = 1.0;
  int grid_rows = 3;
  int grid_cols = 3;

  void validate() const {
    if (!(c_base >= 1.0)) throw Error(Errc::InvalidConfig, "c_base must be >= 1");
    if (!(th > 0.0)) throw Error(Errc::InvalidConfig, "th must be > 0");
    if (grid_rows < 1 || grid_cols < 1) throw Error(Errc::InvalidConfig, "grid must be at least 1x1");
  }
};

enum class SceneMode { Point, PointLine };

inline const char* to_string(SceneMode m) { return m == SceneMode::Point ? "Point" : "PointLine"; }

/// Bins points into a rows x cols grid by floor division. Points on the far
/// image border fall into the last row/column.
inline GridStats grid_partition(double width, double height, std::span<const Vec2> points,
                                int rows = 3, int cols = 3) {
  if (!(width > 0.0) || !(height > 0.0)) throw Error(Errc::EmptyImage, "image has zero extent");
  if (rows < 1 || cols < 1) throw Error(Errc::InvalidConfig, "grid must be at least 1x1");

  const double cell_w = width / cols;
  const double cell_h = height / rows;
  const std::size_t n_cells = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);

  GridStats stats;
  stats.rows = rows;
  stats.cols = cols;
  stats.cell_count.assign(n_cells, 0);
  stats.cell_variance.assign(n_cells, 0.0);

  std::vector<std::vector<Vec2>> normalized(n_cells);
  for (const Vec2& p : points) {
    const int col = std::clamp(static_cast<int>(std::floor(p.x() / cell_w)), 0, cols - 1);
    const int row = std::clamp(static_cast<int>(std::floor(p.y() / cell_h)), 0, rows - 1);
    const std::size_t idx = static_cast<std::size_t>(row) * cols + col;
    normalized[idx].emplace_back((p.x() - col * cell_w) / cell_w, (p.y() - row * cell_h) / cell_h);
  }

  for (std::size_t i = 0; i < n_cells; ++i) {
    const auto& pts = normalized[i];
    stats.cell_count[i] = pts.size();
    if (pts.size() < 2) continue;
    Vec2 mean = Vec2::Zero();
    for (const Vec2& q : pts) mean += q;
    mean /= static_cast<double>(pts.size());
    double var = 0.0;
    for (const Vec2& q : pts) var += (q - mean).squaredNorm();
    stats.cell_variance[i] = var / static_cast<double>(pts.size());
  }
  return stats;
}

/// Mean over cells of an abundance term c_i / c_base plus a spread term
/// 1 / (1 + sigma_i). The spread term only counts for cells with two or more
/// points, so an empty frame scores 0.
inline double feature_quality(const GridStats& stats, double c_base) {
  if (!(c_base >= 1.0)) throw Error(Errc::InvalidConfig, "c_base must be >= 1");
  if (stats.cells() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < stats.cells(); ++i) {
    sum += static_cast<double>(stats.cell_count[i]) / c_base;
    if (stats.cell_count[i] >= 2) sum += 1.0 / (1.0 + std::sqrt(stats.cell_variance[i]));
  }
  return sum / static_cast<double>(stats.cells());
}

inline SceneMode decide_mode(double q, double th) {
  return q >= th ? SceneMode::Point : SceneMode::PointLine;
}

/// Conservative thresholds from stable frames: c_base is the smallest mean
/// cell count (at least 1), th the smallest score under that c_base.
inline AwarenessConfig calibrate(std::span<const GridStats> stable_frames) {
  if (stable_frames.empty()) throw Error(Errc::EmptyCalibrationSet, "no frames to calibrate on");
  double c_base = stable_frames.front().mean_count();
  for (const GridStats& s : stable_frames) c_base = std::min(c_base, s.mean_count());
  c_base = std::max(c_base, 1.0);

  double th = feature_quality(stable_frames.front(), c_base);
  for (const GridStats& s : stable_frames) th = std::min(th, feature_quality(s, c_base));

  AwarenessConfig cfg;
  cfg.c_base = c_base;
  cfg.th = th;
  cfg.grid_rows = stable_frames.front().rows;
  cfg.grid_cols = stable_frames.front().cols;
  return cfg;
}

}  // namespace fadslam
