#include <gtest/gtest.h>

#include <random>

#include "fadslam/geometry.hpp"
#include "support/test_util.hpp"

using namespace fadslam;
using namespace fadslam::testing;

namespace {

const CameraIntrinsics kCam{};

template <class F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::IoError;
}

}  // namespace

TEST(Projection, OpticalAxis) {
  const Vec2 px = project(kCam, Pose::identity(), Vec3(0, 0, 1));
  EXPECT_DOUBLE_EQ(px.x(), 320.0);
  EXPECT_DOUBLE_EQ(px.y(), 240.0);
}

TEST(Projection, OffAxis) {
  const Vec2 px = project(kCam, Pose::identity(), Vec3(1, 0, 2));
  EXPECT_NEAR(px.x(), 570.0, 1e-12);
  EXPECT_NEAR(px.y(), 240.0, 1e-12);
}

TEST(Projection, BehindCamera) {
  EXPECT_EQ(error_of([] { project(kCam, Pose::identity(), Vec3(0, 0, -1)); }), Errc::NonPositiveDepth);
  EXPECT_EQ(error_of([] { project(kCam, Pose::identity(), Vec3(0, 0, 0)); }), Errc::NonPositiveDepth);
}

TEST(Backprojection, Examples) {
  EXPECT_LT((backproject(kCam, {320, 240}, 2.0) - Vec3(0, 0, 2)).norm(), 1e-12);
  EXPECT_LT((backproject(kCam, {570, 240}, 2.0) - Vec3(1, 0, 2)).norm(), 1e-12);
  EXPECT_EQ(error_of([] { backproject(kCam, {320, 240}, 0.0); }), Errc::InvalidDepth);
  EXPECT_EQ(error_of([] { backproject(kCam, {320, 240}, -1.0); }), Errc::InvalidDepth);
  EXPECT_EQ(error_of([] { backproject(kCam, {320, 240}, std::nan("")); }), Errc::InvalidDepth);
}

TEST(Backprojection, RoundTripProperty) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 px(uniform(rng, 0, 639.999), uniform(rng, 0, 479.999));
    const double depth = uniform(rng, 0.1, 100.0);
    const Vec2 back = project(kCam, Pose::identity(), backproject(kCam, px, depth));
    ASSERT_LT((back - px).norm(), 1e-9);
  }
}

TEST(Intrinsics, Validation) {
  CameraIntrinsics k;
  EXPECT_NO_THROW(k.validate());
  k.fx = 0;
  EXPECT_THROW(k.validate(), Error);
  k = {};
  k.cx = 640;
  EXPECT_THROW(k.validate(), Error);
}

TEST(Fundamental, ZeroBaseline) {
  EXPECT_EQ(error_of([] { fundamental_from_poses(kCam, Pose::identity(), Pose::identity()); }),
            Errc::DegenerateBaseline);
  const Pose pure_rotation{so3_exp(Vec3(0, 0.1, 0)), Vec3::Zero()};
  EXPECT_EQ(error_of([&] { fundamental_from_poses(kCam, Pose::identity(), pure_rotation); }),
            Errc::DegenerateBaseline);
}

TEST(Fundamental, PureXTranslationGivesHorizontalLines) {
  const Pose t_j{Mat3::Identity(), Vec3(-1, 0, 0)};  // camera moved +1 in x
  const Mat3 f = fundamental_from_poses(kCam, Pose::identity(), t_j);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vec3 p = random_visible_point(rng, kCam, Pose::identity(), 3.0, 6.0);
    const Vec2 xi = project(kCam, Pose::identity(), p);
    const Vec2 xj = project(kCam, t_j, p);
    const ImageLine2D l = epipolar_line(f, xi);
    EXPECT_NEAR(std::abs(l.b), 1.0, 1e-12);
    EXPECT_NEAR(point_line_distance(l, xj), 0.0, 1e-9);
  }
}

TEST(Fundamental, BilinearResidualOnRandomPairs) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose t_i = random_pose(rng, 0.3, 0.5);
    const Pose t_j = random_pose(rng, 0.3, 0.5);
    const Mat3 f = fundamental_from_poses(kCam, t_i, t_j);
    EXPECT_NEAR(f.norm(), 1.0, 1e-12);
    Eigen::JacobiSVD<Mat3> svd(f);
    EXPECT_LT(svd.singularValues()(2), 1e-12);
    int used = 0;
    while (used < 50) {
      const Vec3 p = random_vec3(rng, 2.0) + Vec3(0, 0, 5);
      const Vec3 ci = t_i * p;
      const Vec3 cj = t_j * p;
      if (ci.z() < 0.5 || cj.z() < 0.5) continue;
      const Vec3 xi = project(kCam, t_i, p).homogeneous();
      const Vec3 xj = project(kCam, t_j, p).homogeneous();
      EXPECT_LT(std::abs(xj.dot(f * xi)), 1e-9);
      ++used;
    }
  }
}

TEST(EpipolarLine, CanonicalForm) {
  Mat3 f;
  f << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  const ImageLine2D l = epipolar_line(f, Vec3(100, 240, 1));
  EXPECT_NEAR(l.a, 0.0, 1e-15);
  EXPECT_NEAR(std::abs(l.b), 1.0, 1e-15);
  EXPECT_NEAR(l.a * 100 + l.b * 240 + l.c, 0.0, 1e-12);
  EXPECT_NEAR(l.a * l.a + l.b * l.b, 1.0, 1e-12);
}

TEST(EpipolarLine, HomogeneousScaling) {
  std::mt19937_64 rng(4);
  const Mat3 f = fundamental_from_poses(kCam, random_pose(rng), random_pose(rng));
  const Vec3 x(123, 45, 1);
  const ImageLine2D a = epipolar_line(f, x);
  const ImageLine2D b = epipolar_line(f, Vec3(2 * x));
  EXPECT_NEAR(a.a, b.a, 1e-12);
  EXPECT_NEAR(a.b, b.b, 1e-12);
  EXPECT_NEAR(a.c, b.c, 1e-9);
}

TEST(EpipolarLine, AtEpipoleIsNull) {
  std::mt19937_64 rng(5);
  const Mat3 f = fundamental_from_poses(kCam, random_pose(rng), random_pose(rng));
  Eigen::JacobiSVD<Mat3> svd(f, Eigen::ComputeFullV);
  const Vec3 epipole = svd.matrixV().col(2);
  EXPECT_EQ(error_of([&] { epipolar_line(f, epipole); }), Errc::NullLine);
}

TEST(PointLineDistance, Examples) {
  EXPECT_DOUBLE_EQ(point_line_distance({0, 1, -240}, {100, 250}), 10.0);
  EXPECT_DOUBLE_EQ(point_line_distance({0, 1, -240}, {17, 240}), 0.0);
  EXPECT_NEAR(point_line_distance({0.6, 0.8, -10}, {5, 5}), 3.0, 1e-12);
}

TEST(Pose, GroupLaws) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng, 3.0, 5.0);
    const Pose b = random_pose(rng, 3.0, 5.0);
    const Pose c = random_pose(rng, 3.0, 5.0);
    const Pose id = a.inverse() * a;
    EXPECT_LT(max_abs(id.rotation - Mat3::Identity()), 1e-9);
    EXPECT_LT(id.translation.norm(), 1e-9);
    const Pose l = (a * b) * c;
    const Pose r = a * (b * c);
    EXPECT_LT(max_abs(l.rotation - r.rotation), 1e-9);
    EXPECT_LT((l.translation - r.translation).norm(), 1e-9);
    EXPECT_LT(max_abs(a.rotation.transpose() * a.rotation - Mat3::Identity()), 1e-9);
    EXPECT_NEAR(a.rotation.determinant(), 1.0, 1e-9);
  }
}

TEST(Pose, QuaternionRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng, 3.0, 5.0);
    const Eigen::Quaterniond q = a.quaternion();
    EXPECT_GE(q.w(), 0.0);
    const Pose b = Pose::from_quaternion(q, a.translation);
    EXPECT_LT(max_abs(a.rotation - b.rotation), 1e-12);
  }
}

TEST(Lie, RetractZeroIsIdentity) {
  std::mt19937_64 rng(8);
  const Pose t = random_pose(rng);
  const Pose r = se3_retract(t, Vec6::Zero());
  EXPECT_LT(max_abs(r.rotation - t.rotation), 1e-12);
  EXPECT_LT((r.translation - t.translation).norm(), 1e-12);
}

TEST(Lie, LocalInvertsRetract) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const Pose t = random_pose(rng, 3.0, 3.0);
    const Vec6 d = random_delta(rng, 0.05);
    EXPECT_LT((se3_local(t, se3_retract(t, d)) - d).norm(), 1e-9);
    const Vec6 d2 = random_vec6(rng, 0.05);
    EXPECT_LT((se3_local(t, se3_retract(t, d2)) - d2).norm(), 1e-9);
  }
}

TEST(Lie, OneParameterSubgroup) {
  std::mt19937_64 rng(10);
  const Pose t = random_pose(rng);
  Vec6 d = Vec6::Zero();
  d(4) = 0.3;
  const Pose once = se3_retract(t, d);
  const Pose twice = se3_retract(se3_retract(t, d / 2), d / 2);
  EXPECT_LT(max_abs(once.rotation - twice.rotation), 1e-9);
  EXPECT_LT((once.translation - twice.translation).norm(), 1e-9);
}

TEST(Lie, ExpLogRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    Vec6 xi = random_vec6(rng, 1.0);
    EXPECT_LT((se3_log(se3_exp(xi)) - xi).norm(), 1e-9);
  }
  Vec6 tiny = Vec6::Zero();
  tiny << 1e-3, 2e-3, 0, 1e-9, 0, 0;
  EXPECT_LT((se3_log(se3_exp(tiny)) - tiny).norm(), 1e-12);
}

TEST(Lie, RetractKeepsRotationOrthonormal) {
  std::mt19937_64 rng(12);
  Pose t = Pose::identity();
  for (int i = 0; i < 1000; ++i) t = se3_retract(t, random_vec6(rng, 0.2));
  EXPECT_LT(max_abs(t.rotation.transpose() * t.rotation - Mat3::Identity()), 1e-12);
  EXPECT_NEAR(t.rotation.determinant(), 1.0, 1e-12);
}
