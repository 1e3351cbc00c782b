#pragma once

// Rigid poses, the pinhole camera, and two-view epipolar geometry.
//
// Conventions:
//   * Pose maps source coordinates to target coordinates: x_t = R * x_s + t.
//     A camera pose T_cw maps world points into the camera frame.
//   * Tangent vectors are ordered [translation; rotation] and act on the left:
//     se3_retract(T, d) = Exp(d) * T.
//   * Pixels are continuous; nothing in here rounds.

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "fadslam/error.hpp"

namespace fadslam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

/// Parallax below which a frame pair has no usable epipolar geometry.
inline constexpr double kBaselineEpsilon = 1e-4;
/// Camera-frame depth at or below which a point does not project.
inline constexpr double kMinProjectionDepth = 1e-9;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  static Pose from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
    return {q.normalized().toRotationMatrix(), t};
  }

  /// Unit quaternion with non-negative scalar part.
  Eigen::Quaterniond quaternion() const {
    Eigen::Quaterniond q(rotation);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    return q;
  }

  Pose inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  /// Camera centre in the source frame (for T_cw: position in the world).
  Vec3 center() const { return -(rotation.transpose() * translation); }

  bool is_finite() const { return rotation.allFinite() && translation.allFinite(); }
};

/// Nearest rotation to `m` via its quaternion.
inline Mat3 orthonormalize(const Mat3& m) {
  return Eigen::Quaterniond(m).normalized().toRotationMatrix();
}

struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
      throw Error(Errc::InvalidConfig, "focal lengths must be positive");
    if (width <= 0 || height <= 0)
      throw Error(Errc::InvalidConfig, "image size must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
      throw Error(Errc::InvalidConfig, "principal point outside the image");
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  Mat3 inverse_matrix() const {
    Mat3 k;
    k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
    return k;
  }

  /// Boundary-inclusive containment in [0, width] x [0, height].
  bool contains(const Vec2& px) const {
    return px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= width && px.y() <= height;
  }
};

/// Pinhole projection of a camera-frame point.
inline Vec2 project_camera(const CameraIntrinsics& k, const Vec3& pc) {
  if (!(pc.z() > kMinProjectionDepth))
    throw Error(Errc::NonPositiveDepth, "point at depth " + std::to_string(pc.z()));
  return {k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy};
}

inline Vec2 project(const CameraIntrinsics& k, const Pose& t_cw, const Vec3& p_w) {
  return project_camera(k, t_cw * p_w);
}

/// Lifts a pixel with known depth into the camera frame.
inline Vec3 backproject(const CameraIntrinsics& k, const Vec2& px, double depth) {
  if (!std::isfinite(depth) || depth <= 0.0)
    throw Error(Errc::InvalidDepth, "depth " + std::to_string(depth));
  return {(px.x() - k.cx) / k.fx * depth, (px.y() - k.cy) / k.fy * depth, depth};
}

/// Homogeneous image line a*u + b*v + c = 0 with a^2 + b^2 = 1.
struct ImageLine2D {
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;
};

/// F such that x_j^T F x_i = 0 for static points seen from T_i and T_j.
/// Scaled to unit Frobenius norm.
inline Mat3 fundamental_from_poses(const CameraIntrinsics& k, const Pose& t_i, const Pose& t_j) {
  const Pose t_ji = t_j * t_i.inverse();
  const double baseline = t_ji.translation.norm();
  if (!(baseline > kBaselineEpsilon))
    throw Error(Errc::DegenerateBaseline, "baseline " + std::to_string(baseline));
  const Mat3 essential = skew(t_ji.translation) * t_ji.rotation;
  const Mat3 k_inv = k.inverse_matrix();
  Mat3 f = k_inv.transpose() * essential * k_inv;
  return f / f.norm();
}

inline ImageLine2D epipolar_line(const Mat3& f, const Vec3& x) {
  const Vec3 l = f * x;
  const double n = std::hypot(l.x(), l.y());
  if (!(n >= 1e-12)) throw Error(Errc::NullLine, "point maps to the null line");
  return {l.x() / n, l.y() / n, l.z() / n};
}

inline ImageLine2D epipolar_line(const Mat3& f, const Vec2& px) {
  return epipolar_line(f, Vec3(px.x(), px.y(), 1.0));
}

inline double point_line_distance(const ImageLine2D& line, const Vec2& px) {
  return std::abs(line.a * px.x() + line.b * px.y() + line.c);
}

// ---- SO(3) / SE(3) ---------------------------------------------------------

inline Mat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) return orthonormalize(Mat3::Identity() + skew(omega));
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

inline Vec3 so3_log(const Mat3& r) {
  const Eigen::AngleAxisd aa(Eigen::Quaterniond(r).normalized());
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > M_PI) {
    angle = 2.0 * M_PI - angle;
    axis = -axis;
  }
  return angle * axis;
}

/// Left Jacobian of SO(3), the V matrix of the SE(3) exponential.
inline Mat3 so3_left_jacobian(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 w = skew(omega);
  double a;
  double b;
  if (theta < 1e-5) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0;
    b = 1.0 / 6.0 - t2 / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Mat3::Identity() + a * w + b * w * w;
}

inline Pose se3_exp(const Vec6& xi) {
  const Vec3 upsilon = xi.head<3>();
  const Vec3 omega = xi.tail<3>();
  return {so3_exp(omega), so3_left_jacobian(omega) * upsilon};
}

inline Vec6 se3_log(const Pose& t) {
  const Vec3 omega = so3_log(t.rotation);
  Vec6 xi;
  xi.head<3>() = so3_left_jacobian(omega).inverse() * t.translation;
  xi.tail<3>() = omega;
  return xi;
}

/// Exp(delta) * T, re-orthonormalized.
inline Pose se3_retract(const Pose& t, const Vec6& delta) {
  Pose out = se3_exp(delta) * t;
  out.rotation = orthonormalize(out.rotation);
  return out;
}

/// Inverse of se3_retract: the delta taking t_a to t_b.
inline Vec6 se3_local(const Pose& t_a, const Pose& t_b) { return se3_log(t_b * t_a.inverse()); }

/// Rotation angle (rad) and translation distance between two poses.
inline std::array<double, 2> pose_distance(const Pose& a, const Pose& b) {
  const Pose d = a.inverse() * b;
  return {so3_log(d.rotation).norm(), (a.translation - b.translation).norm()};
}

}  // namespace fadslam
