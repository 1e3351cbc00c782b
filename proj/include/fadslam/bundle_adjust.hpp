#pragma once

// Sliding-window bundle adjustment over keyframe poses, map points and map
// lines (free endpoints), and the point-only global refinement.
//
// The normal equations are solved by eliminating the landmark blocks (3x3 per
// point, 6x6 per line) and solving the reduced pose system densely.

#include <algorithm>
#include <cstdint>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "fadslam/error.hpp"
#include "fadslam/geometry.hpp"
#include "fadslam/pose_opt.hpp"

namespace fadslam {

struct BaKeyframe {
  std::size_t id = 0;
  Pose pose;  // T_cw
  bool fixed = false;
};

struct BaPoint {
  std::size_t id = 0;
  Vec3 position = Vec3::Zero();
  bool fixed = false;
};

struct BaLine {
  std::size_t id = 0;
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  bool fixed = false;
};

struct BaPointObservation {
  std::size_t keyframe = 0;  // index into WindowProblem::keyframes
  std::size_t point = 0;     // index into WindowProblem::points
  Vec2 pixel = Vec2::Zero();
};

struct BaLineObservation {
  std::size_t keyframe = 0;
  std::size_t line = 0;
  Vec2 start = Vec2::Zero();  // paired with BaLine::start
  Vec2 end = Vec2::Zero();
};

struct WindowProblem {
  CameraIntrinsics camera;
  std::vector<BaKeyframe> keyframes;
  std::vector<BaPoint> points;
  std::vector<BaLine> lines;
  std::vector<BaPointObservation> point_obs;
  std::vector<BaLineObservation> line_obs;
  std::size_t anchor = 0;  // keyframe index held fixed
};

struct BaOptions {
  RobustKernel point_kernel = RobustKernel::point_default();
  RobustKernel line_kernel = RobustKernel::line_default();
  double line_weight = 1.0;
  LmOptions lm{};
  std::size_t min_observations = 2;  // landmarks seen fewer times are held fixed
};

struct BaResult {
  WindowProblem problem;  // optimized copy
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t held_points = 0;
  std::size_t held_lines = 0;
  std::size_t invalid_observations = 0;
  std::uint64_t point_residual_evals = 0;
  std::uint64_t line_residual_evals = 0;
};

namespace detail {

inline void validate_window(const WindowProblem& p) {
  if (p.keyframes.size() < 2) throw Error(Errc::InvalidConfig, "window needs at least two keyframes");
  if (p.anchor >= p.keyframes.size()) throw Error(Errc::InvalidConfig, "anchor keyframe out of range");
  for (const auto& o : p.point_obs)
    if (o.keyframe >= p.keyframes.size() || o.point >= p.points.size())
      throw Error(Errc::InvalidConfig, "point observation references a missing pose or landmark");
  for (const auto& o : p.line_obs)
    if (o.keyframe >= p.keyframes.size() || o.line >= p.lines.size())
      throw Error(Errc::InvalidConfig, "line observation references a missing pose or landmark");
}

template <int D>
struct LandmarkBlock {
  Eigen::Matrix<double, D, D> hll = Eigen::Matrix<double, D, D>::Zero();
  Eigen::Matrix<double, D, 1> bl = Eigen::Matrix<double, D, 1>::Zero();
  std::map<int, Eigen::Matrix<double, 6, D>> hcl;  // pose variable -> block
  Eigen::Matrix<double, D, D> hll_inv;
  bool active = false;
};

class WindowSolver {
 public:
  WindowSolver(const WindowProblem& p, const BaOptions& opt) : p_(p), opt_(opt) {
    pose_var_.assign(p.keyframes.size(), -1);
    for (std::size_t i = 0; i < p.keyframes.size(); ++i)
      if (i != p.anchor && !p.keyframes[i].fixed) pose_var_[i] = n_pose_vars_++;

    std::vector<std::size_t> point_seen(p.points.size(), 0);
    std::vector<std::size_t> line_seen(p.lines.size(), 0);
    point_ok_.assign(p.point_obs.size(), true);
    line_ok_.assign(p.line_obs.size(), true);
    for (std::size_t i = 0; i < p.point_obs.size(); ++i) {
      const auto& o = p.point_obs[i];
      if (!((p.keyframes[o.keyframe].pose * p.points[o.point].position).z() > kMinProjectionDepth)) {
        point_ok_[i] = false;
        ++invalid_;
        continue;
      }
      ++point_seen[o.point];
    }
    for (std::size_t i = 0; i < p.line_obs.size(); ++i) {
      const auto& o = p.line_obs[i];
      const Pose& t = p.keyframes[o.keyframe].pose;
      if (!((t * p.lines[o.line].start).z() > kMinProjectionDepth) ||
          !((t * p.lines[o.line].end).z() > kMinProjectionDepth)) {
        line_ok_[i] = false;
        ++invalid_;
        continue;
      }
      ++line_seen[o.line];
    }
    point_free_.assign(p.points.size(), false);
    line_free_.assign(p.lines.size(), false);
    for (std::size_t i = 0; i < p.points.size(); ++i) {
      point_free_[i] = !p.points[i].fixed && point_seen[i] >= opt.min_observations;
      if (!p.points[i].fixed && !point_free_[i]) ++held_points_;
    }
    for (std::size_t i = 0; i < p.lines.size(); ++i) {
      line_free_[i] = !p.lines[i].fixed && line_seen[i] >= opt.min_observations;
      if (!p.lines[i].fixed && !line_free_[i]) ++held_lines_;
    }
  }

  BaResult solve(OptimizerTrace* trace) {
    BaResult result;
    WindowProblem state = p_;
    const std::uint64_t p0 = work_counters().point_residuals;
    const std::uint64_t l0 = work_counters().line_residuals;

    double cost = evaluate(state).cost;
    result.initial_cost = cost;
    double lambda = opt_.lm.initial_lambda;

    for (int it = 0; it < opt_.lm.max_iters; ++it) {
      result.iterations = it + 1;
      if (dirty_) build(state);

      Eigen::VectorXd dx_pose;
      std::vector<Vec3> dx_points;
      std::vector<Vec6> dx_lines;
      if (!step(lambda, dx_pose, dx_points, dx_lines)) {
        lambda *= opt_.lm.lambda_up;
        if (trace) trace->add(it, cost, lambda, 0.0, false);
        if (lambda > opt_.lm.max_lambda) break;
        continue;
      }
      double sq = dx_pose.squaredNorm();
      for (const Vec3& d : dx_points) sq += d.squaredNorm();
      for (const Vec6& d : dx_lines) sq += d.squaredNorm();
      const double norm = std::sqrt(sq);
      if (norm < opt_.lm.tol) {
        result.converged = true;
        if (trace) trace->add(it, cost, lambda, norm, false);
        break;
      }

      WindowProblem candidate = state;
      for (std::size_t i = 0; i < candidate.keyframes.size(); ++i)
        if (pose_var_[i] >= 0)
          candidate.keyframes[i].pose = se3_retract(candidate.keyframes[i].pose, dx_pose.segment<6>(6 * pose_var_[i]));
      for (std::size_t i = 0; i < candidate.points.size(); ++i)
        if (point_free_[i]) candidate.points[i].position += dx_points[i];
      for (std::size_t i = 0; i < candidate.lines.size(); ++i) {
        if (!line_free_[i]) continue;
        candidate.lines[i].start += dx_lines[i].head<3>();
        candidate.lines[i].end += dx_lines[i].tail<3>();
      }

      const auto c = evaluate(candidate);
      const bool accept = c.all_valid && c.cost < cost;
      if (accept) {
        state = std::move(candidate);
        cost = c.cost;
        lambda *= opt_.lm.lambda_down;
        dirty_ = true;
      } else {
        lambda *= opt_.lm.lambda_up;
      }
      if (trace) trace->add(it, cost, lambda, norm, accept);
      if (lambda > opt_.lm.max_lambda) break;
    }

    result.problem = std::move(state);
    result.final_cost = cost;
    result.held_points = held_points_;
    result.held_lines = held_lines_;
    result.invalid_observations = invalid_;
    result.point_residual_evals = work_counters().point_residuals - p0;
    result.line_residual_evals = work_counters().line_residuals - l0;
    return result;
  }

 private:
  struct Cost {
    double cost = 0.0;
    bool all_valid = true;
  };

  Cost evaluate(const WindowProblem& s) const {
    Cost out;
    for (std::size_t i = 0; i < s.point_obs.size(); ++i) {
      if (!point_ok_[i]) continue;
      const auto& o = s.point_obs[i];
      const auto res = point_residual(s.camera, s.keyframes[o.keyframe].pose, {o.pixel, s.points[o.point].position});
      if (!res) {
        out.all_valid = false;
        continue;
      }
      out.cost += opt_.point_kernel.rho(res->squared_norm());
    }
    for (std::size_t i = 0; i < s.line_obs.size(); ++i) {
      if (!line_ok_[i]) continue;
      const auto& o = s.line_obs[i];
      const BaLine& l = s.lines[o.line];
      const auto res = line_residual(s.camera, s.keyframes[o.keyframe].pose, {o.start, o.end, l.start, l.end});
      if (!res) {
        out.all_valid = false;
        continue;
      }
      out.cost += opt_.line_weight * opt_.line_kernel.rho(res->squared_norm());
    }
    return out;
  }

  void build(const WindowProblem& s) {
    const int n = 6 * n_pose_vars_;
    hcc_ = Eigen::MatrixXd::Zero(n, n);
    bc_ = Eigen::VectorXd::Zero(n);
    points_.assign(s.points.size(), {});
    lines_.assign(s.lines.size(), {});

    for (std::size_t i = 0; i < s.point_obs.size(); ++i) {
      if (!point_ok_[i]) continue;
      const auto& o = s.point_obs[i];
      const auto res = point_residual(s.camera, s.keyframes[o.keyframe].pose, {o.pixel, s.points[o.point].position});
      if (!res) continue;
      const double w = opt_.point_kernel.weight(res->squared_norm());
      accumulate<3, 2>(o.keyframe, o.point, point_free_[o.point], points_, res->d_pose, res->d_point, res->r, w);
    }
    for (std::size_t i = 0; i < s.line_obs.size(); ++i) {
      if (!line_ok_[i]) continue;
      const auto& o = s.line_obs[i];
      const BaLine& l = s.lines[o.line];
      const auto res = line_residual(s.camera, s.keyframes[o.keyframe].pose, {o.start, o.end, l.start, l.end});
      if (!res) continue;
      const double w = opt_.line_weight * opt_.line_kernel.weight(res->squared_norm());
      accumulate<6, 4>(o.keyframe, o.line, line_free_[o.line], lines_, res->d_pose, res->d_endpoints, res->r, w);
    }
    dirty_ = false;
  }

  template <int D, int R, typename JPose, typename JLm, typename Res>
  void accumulate(std::size_t kf, std::size_t lm, bool lm_free, std::vector<LandmarkBlock<D>>& blocks,
                  const JPose& jc, const JLm& jl, const Res& r, double w) {
    const int pv = pose_var_[kf];
    if (pv >= 0) {
      hcc_.block<6, 6>(6 * pv, 6 * pv).noalias() += w * jc.transpose() * jc;
      bc_.segment<6>(6 * pv).noalias() -= w * jc.transpose() * r;
    }
    if (!lm_free) return;
    LandmarkBlock<D>& blk = blocks[lm];
    blk.active = true;
    blk.hll.noalias() += w * jl.transpose() * jl;
    blk.bl.noalias() -= w * jl.transpose() * r;
    if (pv >= 0) {
      auto it = blk.hcl.try_emplace(pv, Eigen::Matrix<double, 6, D>::Zero()).first;
      it->second.noalias() += w * jc.transpose() * jl;
    }
  }

  template <int D>
  void eliminate(std::vector<LandmarkBlock<D>>& blocks, double lambda, Eigen::MatrixXd& s, Eigen::VectorXd& rhs) {
    for (LandmarkBlock<D>& blk : blocks) {
      if (!blk.active) continue;
      Eigen::Matrix<double, D, D> damped = blk.hll;
      for (int d = 0; d < D; ++d) damped(d, d) += lambda * std::max(blk.hll(d, d), 1e-12) + 1e-12;
      blk.hll_inv = damped.inverse();
      for (const auto& [pa, ha] : blk.hcl) {
        const Eigen::Matrix<double, 6, D> ha_inv = ha * blk.hll_inv;
        rhs.segment<6>(6 * pa).noalias() -= ha_inv * blk.bl;
        for (const auto& [pb, hb] : blk.hcl) s.block<6, 6>(6 * pa, 6 * pb).noalias() -= ha_inv * hb.transpose();
      }
    }
  }

  template <int D>
  void back_substitute(const std::vector<LandmarkBlock<D>>& blocks, const Eigen::VectorXd& dx_pose,
                       std::vector<Eigen::Matrix<double, D, 1>>& out) const {
    out.assign(blocks.size(), Eigen::Matrix<double, D, 1>::Zero());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const LandmarkBlock<D>& blk = blocks[i];
      if (!blk.active) continue;
      Eigen::Matrix<double, D, 1> rhs = blk.bl;
      for (const auto& [pv, h] : blk.hcl) rhs.noalias() -= h.transpose() * dx_pose.segment<6>(6 * pv);
      out[i] = blk.hll_inv * rhs;
    }
  }

  bool step(double lambda, Eigen::VectorXd& dx_pose, std::vector<Vec3>& dx_points, std::vector<Vec6>& dx_lines) {
    const int n = 6 * n_pose_vars_;
    Eigen::MatrixXd s = hcc_;
    for (int d = 0; d < n; ++d) s(d, d) += lambda * std::max(hcc_(d, d), 1e-12);
    Eigen::VectorXd rhs = bc_;
    eliminate(points_, lambda, s, rhs);
    eliminate(lines_, lambda, s, rhs);
    dx_pose = n > 0 ? Eigen::VectorXd(s.ldlt().solve(rhs)) : Eigen::VectorXd();
    if (!dx_pose.allFinite()) return false;
    back_substitute(points_, dx_pose, dx_points);
    back_substitute(lines_, dx_pose, dx_lines);
    for (const Vec3& d : dx_points)
      if (!d.allFinite()) return false;
    for (const Vec6& d : dx_lines)
      if (!d.allFinite()) return false;
    return true;
  }

  const WindowProblem& p_;
  const BaOptions& opt_;
  std::vector<int> pose_var_;
  int n_pose_vars_ = 0;
  std::vector<bool> point_ok_, line_ok_, point_free_, line_free_;
  std::size_t held_points_ = 0, held_lines_ = 0, invalid_ = 0;

  bool dirty_ = true;
  Eigen::MatrixXd hcc_;
  Eigen::VectorXd bc_;
  std::vector<LandmarkBlock<3>> points_;
  std::vector<LandmarkBlock<6>> lines_;
};

}  // namespace detail

/// Joint refinement of window poses, points and lines; the anchor keyframe
/// never moves. Landmarks with fewer than `min_observations` usable
/// observations are held fixed but still constrain the poses.
inline BaResult local_bundle_adjust(const WindowProblem& problem, const BaOptions& opt = {},
                                    OptimizerTrace* trace = nullptr) {
  detail::validate_window(problem);
  detail::WindowSolver solver(problem, opt);
  return solver.solve(trace);
}

/// Full-trajectory refinement over points only. Any lines in the input are
/// dropped before optimization; the first keyframe is the fixed gauge.
inline BaResult global_refine(const WindowProblem& problem, const BaOptions& opt = {},
                              OptimizerTrace* trace = nullptr) {
  WindowProblem points_only = problem;
  points_only.lines.clear();
  points_only.line_obs.clear();
  points_only.anchor = 0;
  detail::validate_window(points_only);
  detail::WindowSolver solver(points_only, opt);
  BaResult out = solver.solve(trace);
  out.problem.lines = problem.lines;
  out.problem.line_obs = problem.line_obs;
  return out;
}

}  // namespace fadslam
