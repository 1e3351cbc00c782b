#pragma once

// Point and line reprojection residuals, the Huber kernel and robust
// Levenberg-Marquardt pose estimation on SE(3).
//
// Point residual: r = u - pi(K * T_cw * P_w), cost term rho(|r|^2).
// Line residual:  r = (s - pi(K T S_w), e - pi(K T E_w)), cost term rho(|r|^2).
// Jacobians are taken with respect to the left tangent used by se3_retract.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "fadslam/error.hpp"
#include "fadslam/geometry.hpp"
#include "fadslam/instrumentation.hpp"

namespace fadslam {

using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat46 = Eigen::Matrix<double, 4, 6>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec4 = Eigen::Vector4d;

/// 95% chi-square quantiles for 2 and 4 degrees of freedom.
inline constexpr double kChi2Point = 5.991;
inline constexpr double kChi2Line = 9.488;

struct PointObservation {
  Vec2 pixel = Vec2::Zero();
  Vec3 point_w = Vec3::Zero();
};

struct LineObservation {
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();
  Vec3 start_w = Vec3::Zero();
  Vec3 end_w = Vec3::Zero();
};

/// Huber on a squared residual: s below delta^2, linear in sqrt(s) above.
inline double huber(double s, double delta) {
  const double r = std::sqrt(s);
  return r <= delta ? s : 2.0 * delta * r - delta * delta;
}

enum class KernelKind { None, Huber };

struct RobustKernel {
  KernelKind kind = KernelKind::Huber;
  double delta = std::sqrt(kChi2Point);

  static RobustKernel none() { return {KernelKind::None, 1.0}; }
  static RobustKernel point_default() { return {KernelKind::Huber, std::sqrt(kChi2Point)}; }
  static RobustKernel line_default() { return {KernelKind::Huber, std::sqrt(kChi2Line)}; }

  double rho(double s) const { return kind == KernelKind::Huber ? huber(s, delta) : s; }

  /// d rho / d s, the IRLS weight.
  double weight(double s) const {
    if (kind == KernelKind::None) return 1.0;
    const double r = std::sqrt(s);
    return r <= delta ? 1.0 : delta / r;
  }
};

// ---- residuals ---------------------------------------------------------------

namespace detail {

/// d pi / d p_c for a camera-frame point with positive depth.
inline Mat23 projection_jacobian(const CameraIntrinsics& k, const Vec3& pc) {
  const double iz = 1.0 / pc.z();
  const double iz2 = iz * iz;
  Mat23 j;
  j << k.fx * iz, 0.0, -k.fx * pc.x() * iz2,
       0.0, k.fy * iz, -k.fy * pc.y() * iz2;
  return j;
}

/// d p_c / d delta for p_c = Exp(delta) * p_c.
inline Eigen::Matrix<double, 3, 6> transform_jacobian(const Vec3& pc) {
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>().setIdentity();
  j.rightCols<3>() = -skew(pc);
  return j;
}

}  // namespace detail

struct PointResidual {
  Vec2 r = Vec2::Zero();
  Mat26 d_pose = Mat26::Zero();
  Mat23 d_point = Mat23::Zero();

  double squared_norm() const { return r.squaredNorm(); }
};

/// nullopt when the point is not in front of the camera.
inline std::optional<PointResidual> point_residual(const CameraIntrinsics& k, const Pose& t_cw,
                                                   const PointObservation& obs) {
  ++work_counters().point_residuals;
  const Vec3 pc = t_cw * obs.point_w;
  if (!(pc.z() > kMinProjectionDepth)) return std::nullopt;
  PointResidual out;
  out.r = obs.pixel - project_camera(k, pc);
  const Mat23 dpi = detail::projection_jacobian(k, pc);
  out.d_pose = -dpi * detail::transform_jacobian(pc);
  out.d_point = -dpi * t_cw.rotation;
  return out;
}

struct LineResidual {
  Vec4 r = Vec4::Zero();
  Mat46 d_pose = Mat46::Zero();
  Mat46 d_endpoints = Mat46::Zero();  // columns: start_w (3), end_w (3)

  double squared_norm() const { return r.squaredNorm(); }
};

inline std::optional<LineResidual> line_residual(const CameraIntrinsics& k, const Pose& t_cw,
                                                 const LineObservation& obs) {
  ++work_counters().line_residuals;
  ++work_counters().line_ops;
  const Vec3 ps = t_cw * obs.start_w;
  const Vec3 pe = t_cw * obs.end_w;
  if (!(ps.z() > kMinProjectionDepth) || !(pe.z() > kMinProjectionDepth)) return std::nullopt;
  LineResidual out;
  out.r.head<2>() = obs.start - project_camera(k, ps);
  out.r.tail<2>() = obs.end - project_camera(k, pe);
  const Mat23 dps = detail::projection_jacobian(k, ps);
  const Mat23 dpe = detail::projection_jacobian(k, pe);
  out.d_pose.topRows<2>() = -dps * detail::transform_jacobian(ps);
  out.d_pose.bottomRows<2>() = -dpe * detail::transform_jacobian(pe);
  out.d_endpoints.topLeftCorner<2, 3>() = -dps * t_cw.rotation;
  out.d_endpoints.bottomRightCorner<2, 3>() = -dpe * t_cw.rotation;
  return out;
}

// ---- optimizer trace -----------------------------------------------------------

struct TraceRow {
  std::string label;
  int iteration = 0;
  double cost = 0.0;
  double lambda = 0.0;
  double update_norm = 0.0;
  bool accepted = false;
};

/// Optional sink for per-iteration optimizer state.
struct OptimizerTrace {
  std::vector<TraceRow> rows;
  std::string label;

  void add(int it, double cost, double lambda, double update_norm, bool accepted) {
    rows.push_back({label, it, cost, lambda, update_norm, accepted});
  }
};

// ---- pose estimation -----------------------------------------------------------

struct LmOptions {
  int max_iters = 20;
  double tol = 1e-8;
  double initial_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double max_lambda = 1e12;
};

struct PoseEstimateOptions {
  RobustKernel point_kernel = RobustKernel::point_default();
  RobustKernel line_kernel = RobustKernel::line_default();
  double line_weight = 1.0;
  LmOptions lm{};
};

struct PoseEstimate {
  Pose pose;
  std::vector<bool> point_inliers;
  std::vector<bool> line_inliers;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t invalid_observations = 0;
};

namespace detail {

struct PoseCost {
  double cost = 0.0;
  bool all_valid = true;
};

inline PoseCost pose_cost(const CameraIntrinsics& k, const Pose& t, std::span<const PointObservation> points,
                          std::span<const LineObservation> lines, const std::vector<bool>& point_active,
                          const std::vector<bool>& line_active, const PoseEstimateOptions& opt) {
  PoseCost out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!point_active[i]) continue;
    const auto res = point_residual(k, t, points[i]);
    if (!res) {
      out.all_valid = false;
      continue;
    }
    out.cost += opt.point_kernel.rho(res->squared_norm());
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!line_active[i]) continue;
    const auto res = line_residual(k, t, lines[i]);
    if (!res) {
      out.all_valid = false;
      continue;
    }
    out.cost += opt.line_weight * opt.line_kernel.rho(res->squared_norm());
  }
  return out;
}

}  // namespace detail

/// Robust pose from 2D-3D point and line correspondences. Needs at least three
/// usable points, or two points and one line. Hitting max_iters is not an
/// error: the best iterate comes back with converged = false.
inline PoseEstimate estimate_pose(const CameraIntrinsics& k, std::span<const PointObservation> points,
                                  std::span<const LineObservation> lines, const Pose& t_init,
                                  const PoseEstimateOptions& opt = {}, OptimizerTrace* trace = nullptr) {
  if (!t_init.is_finite()) throw Error(Errc::InvalidConfig, "initial pose is not finite");

  std::vector<bool> point_active(points.size(), false);
  std::vector<bool> line_active(lines.size(), false);
  std::size_t n_points = 0;
  std::size_t n_lines = 0;
  PoseEstimate out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].point_w.allFinite() || !points[i].pixel.allFinite()) continue;
    if (!((t_init * points[i].point_w).z() > kMinProjectionDepth)) continue;
    point_active[i] = true;
    ++n_points;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const LineObservation& l = lines[i];
    if (!l.start_w.allFinite() || !l.end_w.allFinite()) continue;
    if (!((t_init * l.start_w).z() > kMinProjectionDepth) || !((t_init * l.end_w).z() > kMinProjectionDepth))
      continue;
    line_active[i] = true;
    ++n_lines;
  }
  out.invalid_observations = points.size() + lines.size() - n_points - n_lines;
  if (!(n_points >= 3 || (n_points >= 2 && n_lines >= 1)))
    throw Error(Errc::InsufficientObservations,
                std::to_string(n_points) + " points, " + std::to_string(n_lines) + " lines");

  Pose current = t_init;
  double cost = detail::pose_cost(k, current, points, lines, point_active, line_active, opt).cost;
  out.initial_cost = cost;
  double lambda = opt.lm.initial_lambda;

  Mat6 h;
  Vec6 b;
  bool rebuild = true;
  for (int it = 0; it < opt.lm.max_iters; ++it) {
    out.iterations = it + 1;
    if (rebuild) {
      h.setZero();
      b.setZero();
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (!point_active[i]) continue;
        const auto res = point_residual(k, current, points[i]);
        if (!res) continue;
        const double w = opt.point_kernel.weight(res->squared_norm());
        h.noalias() += w * res->d_pose.transpose() * res->d_pose;
        b.noalias() -= w * res->d_pose.transpose() * res->r;
      }
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!line_active[i]) continue;
        const auto res = line_residual(k, current, lines[i]);
        if (!res) continue;
        const double w = opt.line_weight * opt.line_kernel.weight(res->squared_norm());
        h.noalias() += w * res->d_pose.transpose() * res->d_pose;
        b.noalias() -= w * res->d_pose.transpose() * res->r;
      }
      rebuild = false;
    }

    Mat6 damped = h;
    for (int d = 0; d < 6; ++d) damped(d, d) += lambda * std::max(h(d, d), 1e-12);
    const Vec6 delta = damped.ldlt().solve(b);
    const double step = delta.norm();
    if (!delta.allFinite()) {
      lambda *= opt.lm.lambda_up;
      if (trace) trace->add(it, cost, lambda, step, false);
      if (lambda > opt.lm.max_lambda) break;
      continue;
    }
    if (step < opt.lm.tol) {
      out.converged = true;
      if (trace) trace->add(it, cost, lambda, step, false);
      break;
    }

    const Pose candidate = se3_retract(current, delta);
    const auto c = detail::pose_cost(k, candidate, points, lines, point_active, line_active, opt);
    const bool accept = c.all_valid && c.cost < cost;
    if (accept) {
      current = candidate;
      cost = c.cost;
      lambda *= opt.lm.lambda_down;
      rebuild = true;
    } else {
      lambda *= opt.lm.lambda_up;
    }
    if (trace) trace->add(it, cost, lambda, step, accept);
    if (lambda > opt.lm.max_lambda) break;
  }

  out.pose = current;
  out.final_cost = cost;
  out.point_inliers.assign(points.size(), false);
  out.line_inliers.assign(lines.size(), false);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!point_active[i]) continue;
    const auto res = point_residual(k, current, points[i]);
    out.point_inliers[i] = res && res->squared_norm() <= kChi2Point;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!line_active[i]) continue;
    const auto res = line_residual(k, current, lines[i]);
    out.line_inliers[i] = res && res->squared_norm() <= kChi2Line;
  }
  return out;
}

/// Point-only entry point used in Point mode.
inline PoseEstimate estimate_pose_points(const CameraIntrinsics& k, std::span<const PointObservation> points,
                                         const Pose& t_init, const PoseEstimateOptions& opt = {},
                                         OptimizerTrace* trace = nullptr) {
  return estimate_pose(k, points, {}, t_init, opt, trace);
}

}  // namespace fadslam
