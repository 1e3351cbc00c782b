#pragma once

// Trajectory association, rigid alignment, ATE and translational RPE, and the
// TUM-style trajectory text format.
//
// Trajectory poses are camera-to-world (T_wc), as in the TUM files: the
// translation is the camera position.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "fadslam/error.hpp"
#include "fadslam/geometry.hpp"

namespace fadslam {

struct TrajectoryEntry {
  double timestamp = 0.0;
  Pose pose;  // T_wc
};

struct Trajectory {
  std::vector<TrajectoryEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  void validate() const {
    if (entries.empty()) throw Error(Errc::InvalidConfig, "trajectory is empty");
    for (std::size_t i = 1; i < entries.size(); ++i)
      if (!(entries[i].timestamp > entries[i - 1].timestamp))
        throw Error(Errc::InvalidConfig, "timestamps must be strictly increasing");
  }

  double path_length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < entries.size(); ++i)
      len += (entries[i].pose.translation - entries[i - 1].pose.translation).norm();
    return len;
  }
};

struct ErrorStats {
  double rmse = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // population
  std::size_t n = 0;
};

inline ErrorStats error_stats(const std::vector<double>& errors) {
  ErrorStats s;
  s.n = errors.size();
  if (errors.empty()) return s;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double e : errors) {
    sum += e;
    sum_sq += e * e;
  }
  const double n = static_cast<double>(errors.size());
  s.mean = sum / n;
  s.rmse = std::sqrt(sum_sq / n);
  double var = 0.0;
  for (double e : errors) var += (e - s.mean) * (e - s.mean);
  s.sd = std::sqrt(var / n);
  return s;
}

struct MetricReport {
  double ate_rmse = 0.0;
  double ate_sd = 0.0;
  double rpe_t_rmse = 0.0;
  double rpe_t_sd = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_rpe = 0;
};

/// Greedy one-to-one timestamp matching: candidate pairs within max_dt are
/// taken in order of increasing |dt|. Returned pairs are (est, gt) sorted by est index.
inline std::vector<std::pair<std::size_t, std::size_t>> associate(const Trajectory& est, const Trajectory& gt,
                                                                  double max_dt) {
  if (!(max_dt > 0.0)) throw Error(Errc::InvalidConfig, "max_dt must be positive");
  struct Candidate {
    double dt;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = est.entries[i].timestamp;
    auto lo = std::lower_bound(gt.entries.begin(), gt.entries.end(), t - max_dt,
                               [](const TrajectoryEntry& e, double v) { return e.timestamp < v; });
    for (auto it = lo; it != gt.entries.end() && it->timestamp <= t + max_dt; ++it)
      candidates.push_back({std::abs(it->timestamp - t), i, static_cast<std::size_t>(it - gt.entries.begin())});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.dt < b.dt; });
  std::vector<bool> used_i(est.size(), false);
  std::vector<bool> used_j(gt.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const Candidate& c : candidates) {
    if (used_i[c.i] || used_j[c.j]) continue;
    used_i[c.i] = used_j[c.j] = true;
    pairs.emplace_back(c.i, c.j);
  }
  if (pairs.empty()) throw Error(Errc::NoAssociations, "no timestamps within max_dt");
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

/// Rigid (scale 1) least-squares alignment gt ~ R * est + t.
inline Pose umeyama_align(const std::vector<Vec3>& est, const std::vector<Vec3>& gt) {
  if (est.size() != gt.size()) throw Error(Errc::InvalidConfig, "position lists differ in length");
  if (est.size() < 3) throw Error(Errc::DegenerateConfiguration, "need at least 3 positions");
  const Eigen::Index n = static_cast<Eigen::Index>(est.size());
  Eigen::Matrix3Xd src(3, n);
  Eigen::Matrix3Xd dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = est[static_cast<std::size_t>(i)];
    dst.col(i) = gt[static_cast<std::size_t>(i)];
  }
  for (const Eigen::Matrix3Xd* m : {&src, &dst}) {
    const Eigen::Matrix3Xd centered = m->colwise() - m->rowwise().mean();
    const Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(centered);
    const auto sv = svd.singularValues();
    if (!(sv(1) > 1e-9 * std::max(1.0, sv(0))))
      throw Error(Errc::DegenerateConfiguration, "positions are collinear");
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
  return {t.topLeftCorner<3, 3>(), t.topRightCorner<3, 1>()};
}

/// Per-pair position errors after optional rigid alignment.
inline std::vector<double> ate_errors(const Trajectory& est, const Trajectory& gt, bool align, double max_dt = 0.02) {
  const auto pairs = associate(est, gt, max_dt);
  std::vector<Vec3> e;
  std::vector<Vec3> g;
  for (const auto& [i, j] : pairs) {
    e.push_back(est.entries[i].pose.translation);
    g.push_back(gt.entries[j].pose.translation);
  }
  Pose alignment;
  if (align) alignment = umeyama_align(e, g);
  std::vector<double> errors;
  errors.reserve(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) errors.push_back((g[k] - alignment * e[k]).norm());
  return errors;
}

inline ErrorStats ate(const Trajectory& est, const Trajectory& gt, bool align, double max_dt = 0.02) {
  return error_stats(ate_errors(est, gt, align, max_dt));
}

/// Translational relative error over `delta` associated poses.
inline ErrorStats rpe_translation(const Trajectory& est, const Trajectory& gt, std::size_t delta = 1,
                                  double max_dt = 0.02) {
  if (delta < 1) throw Error(Errc::InvalidConfig, "rpe delta must be >= 1");
  const auto pairs = associate(est, gt, max_dt);
  if (pairs.size() < delta + 1) throw Error(Errc::InsufficientPoses, "fewer than delta + 1 associated poses");
  std::vector<double> errors;
  for (std::size_t k = 0; k + delta < pairs.size(); ++k) {
    const Pose& e0 = est.entries[pairs[k].first].pose;
    const Pose& e1 = est.entries[pairs[k + delta].first].pose;
    const Pose& g0 = gt.entries[pairs[k].second].pose;
    const Pose& g1 = gt.entries[pairs[k + delta].second].pose;
    const Pose err = (g0.inverse() * g1).inverse() * (e0.inverse() * e1);
    errors.push_back(err.translation.norm());
  }
  return error_stats(errors);
}

inline MetricReport evaluate_trajectory(const Trajectory& est, const Trajectory& gt, bool align = true,
                                        std::size_t rpe_delta = 1, double max_dt = 0.02) {
  MetricReport r;
  const ErrorStats a = ate(est, gt, align, max_dt);
  const ErrorStats p = rpe_translation(est, gt, rpe_delta, max_dt);
  r.ate_rmse = a.rmse;
  r.ate_sd = a.sd;
  r.n_pairs = a.n;
  r.rpe_t_rmse = p.rmse;
  r.rpe_t_sd = p.sd;
  r.n_rpe = p.n;
  return r;
}

// ---- text format ---------------------------------------------------------------
// timestamp tx ty tz qx qy qz qw, '#' comments, LF endings.

inline std::string format_trajectory_line(const TrajectoryEntry& e) {
  const Eigen::Quaterniond q = e.pose.quaternion();
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%.9f %.12f %.12f %.12f %.12f %.12f %.12f %.12f\n", e.timestamp,
                e.pose.translation.x(), e.pose.translation.y(), e.pose.translation.z(), q.x(), q.y(), q.z(), q.w());
  return buf;
}

inline std::string format_trajectory(const Trajectory& t) {
  std::string out = "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& e : t.entries) out += format_trajectory_line(e);
  return out;
}

inline Trajectory parse_trajectory(std::istream& in, const std::string& source = "<stream>") {
  Trajectory t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double v[8];
    int n = 0;
    std::string tok;
    while (ss >> tok) {
      if (n == 8) {
        n = 9;
        break;
      }
      try {
        std::size_t used = 0;
        v[n] = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(Errc::ParseError, source + ":" + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
      ++n;
    }
    if (n != 8)
      throw Error(Errc::ParseError, source + ":" + std::to_string(line_no) + ": expected 8 fields");
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 1e-9))
      throw Error(Errc::ParseError, source + ":" + std::to_string(line_no) + ": zero quaternion");
    if (!t.entries.empty() && !(v[0] > t.entries.back().timestamp))
      throw Error(Errc::ParseError, source + ":" + std::to_string(line_no) + ": timestamps not increasing");
    t.entries.push_back({v[0], Pose::from_quaternion(q, Vec3(v[1], v[2], v[3]))});
  }
  return t;
}

inline Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return parse_trajectory(in, path);
}

inline void write_trajectory(const Trajectory& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << format_trajectory(t);
  if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

}  // namespace fadslam
