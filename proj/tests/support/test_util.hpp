#pragma once

#include <cmath>
#include <random>

#include "fadslam/geometry.hpp"

namespace fadslam::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_vec3(std::mt19937_64& rng, double scale) {
  return {uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
}

inline Vec6 random_vec6(std::mt19937_64& rng, double scale) {
  Vec6 v;
  for (int i = 0; i < 6; ++i) v(i) = uniform(rng, -scale, scale);
  return v;
}

/// Vector of the given norm in a random direction.
inline Vec6 random_delta(std::mt19937_64& rng, double norm) {
  Vec6 v = random_vec6(rng, 1.0);
  return v.normalized() * norm;
}

inline Pose random_pose(std::mt19937_64& rng, double angle = 0.5, double trans = 1.0) {
  Vec3 axis = random_vec3(rng, 1.0);
  Vec3 omega = axis.normalized() * uniform(rng, -angle, angle);
  return {so3_exp(omega), random_vec3(rng, trans)};
}

/// World point in front of a camera with pose t_cw, projecting inside the image.
inline Vec3 random_visible_point(std::mt19937_64& rng, const CameraIntrinsics& k, const Pose& t_cw,
                                 double zmin = 1.0, double zmax = 6.0) {
  const Vec2 px(uniform(rng, 0.0, k.width - 1.0), uniform(rng, 0.0, k.height - 1.0));
  const Vec3 pc = backproject(k, px, uniform(rng, zmin, zmax));
  return t_cw.inverse() * pc;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace fadslam::testing
