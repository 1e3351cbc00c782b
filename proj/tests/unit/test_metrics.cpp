#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "fadslam/metrics.hpp"
#include "support/test_util.hpp"

using namespace fadslam;
using namespace fadslam::testing;

namespace {

Trajectory random_trajectory(std::mt19937_64& rng, int n, double dt = 0.1) {
  Trajectory t;
  Pose p = random_pose(rng);
  for (int i = 0; i < n; ++i) {
    t.entries.push_back({i * dt, p});
    p = se3_retract(p, random_delta(rng, 0.1));
  }
  return t;
}

Trajectory transformed(const Trajectory& t, const Pose& g) {
  Trajectory out = t;
  for (auto& e : out.entries) e.pose = g * e.pose;
  return out;
}

Trajectory straight_line(int n) {
  Trajectory t;
  for (int i = 0; i < n; ++i) t.entries.push_back({i * 0.1, Pose{Mat3::Identity(), Vec3(i * 0.1, 0, 0)}});
  return t;
}

void expect_stats_consistent(const ErrorStats& s) {
  EXPECT_NEAR(s.rmse * s.rmse, s.mean * s.mean + s.sd * s.sd, 1e-9);
}

}  // namespace

TEST(Associate, IdenticalTimestamps) {
  std::mt19937_64 rng(1);
  const Trajectory t = random_trajectory(rng, 20);
  const auto pairs = associate(t, t, 0.02);
  ASSERT_EQ(pairs.size(), 20u);
  for (std::size_t i = 0; i < pairs.size(); ++i) EXPECT_EQ(pairs[i], std::make_pair(i, i));
}

TEST(Associate, HalfToleranceOffset) {
  std::mt19937_64 rng(2);
  const Trajectory gt = random_trajectory(rng, 20);
  Trajectory est = gt;
  for (auto& e : est.entries) e.timestamp += 0.01;
  const auto pairs = associate(est, gt, 0.02);
  ASSERT_EQ(pairs.size(), 20u);
  for (std::size_t i = 0; i < pairs.size(); ++i) EXPECT_EQ(pairs[i].second, i);
}

TEST(Associate, DisjointRanges) {
  std::mt19937_64 rng(3);
  const Trajectory gt = random_trajectory(rng, 10);
  Trajectory est = gt;
  for (auto& e : est.entries) e.timestamp += 100.0;
  try {
    associate(est, gt, 0.02);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoAssociations);
  }
}

TEST(Umeyama, IdentityOnEqualSets) {
  std::mt19937_64 rng(4);
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(random_vec3(rng, 1.0));
  const Pose a = umeyama_align(pts, pts);
  EXPECT_LT((a.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(a.translation.norm(), 1e-12);
}

TEST(Umeyama, RecoversInverseMap) {
  std::mt19937_64 rng(5);
  const Pose g{Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix(), Vec3(1, 2, 3)};
  std::vector<Vec3> gt, est;
  for (int i = 0; i < 10; ++i) {
    gt.push_back(random_vec3(rng, 1.0));
    est.push_back(g * gt.back());
  }
  const Pose a = umeyama_align(est, gt);
  EXPECT_NEAR(a.rotation.determinant(), 1.0, 1e-12);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT((a * est[i] - gt[i]).norm(), 1e-12);
  EXPECT_LT((a * g).translation.norm(), 1e-12);
}

TEST(Umeyama, Degenerate) {
  const std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  const std::vector<Vec3> collinear = {Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2), Vec3(-3, -3, -3)};
  for (const auto* v : {&two, &collinear}) {
    try {
      umeyama_align(*v, *v);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::DegenerateConfiguration);
    }
  }
}

TEST(Umeyama, NeverWorseThanIdentity) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> est, gt;
    const Pose g = random_pose(rng, 1.0, 2.0);
    for (int i = 0; i < 8; ++i) {
      gt.push_back(random_vec3(rng, 1.0));
      est.push_back(g * gt.back() + 0.2 * random_vec3(rng, 1.0));
    }
    const Pose a = umeyama_align(est, gt);
    double aligned = 0, identity = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      aligned += (gt[i] - a * est[i]).squaredNorm();
      identity += (gt[i] - est[i]).squaredNorm();
    }
    EXPECT_LE(aligned, identity + 1e-12);
  }
}

TEST(Ate, Examples) {
  std::mt19937_64 rng(7);
  const Trajectory gt = random_trajectory(rng, 30);
  const ErrorStats same = ate(gt, gt, true);
  EXPECT_LT(same.rmse, 1e-12);
  EXPECT_LT(same.sd, 1e-12);

  Trajectory shifted = gt;
  for (auto& e : shifted.entries) e.pose.translation += Vec3(0.5, -1, 2);
  EXPECT_LT(ate(shifted, gt, true).rmse, 1e-9);

  const Trajectory g2 = straight_line(2);
  Trajectory e2 = g2;
  e2.entries[1].pose.translation += Vec3(0, 0.2, 0);
  const ErrorStats two = ate(e2, g2, false);
  EXPECT_NEAR(two.rmse, std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(two.sd, 0.1, 1e-12);
}

TEST(Ate, InvariantUnderRigidTransformWhenAligned) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory gt = random_trajectory(rng, 40);
    Trajectory est = gt;
    for (auto& e : est.entries) e.pose.translation += 0.05 * random_vec3(rng, 1.0);
    const auto base = ate_errors(est, gt, true);
    const auto moved = ate_errors(transformed(est, random_pose(rng, 2.0, 5.0)), gt, true);
    ASSERT_EQ(base.size(), moved.size());
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(base[i], moved[i], 1e-9);
    expect_stats_consistent(ate(est, gt, true));
  }
}

TEST(Rpe, Examples) {
  std::mt19937_64 rng(9);
  const Trajectory gt = random_trajectory(rng, 30);
  EXPECT_LT(rpe_translation(gt, gt).rmse, 1e-12);
  const ErrorStats moved = rpe_translation(transformed(gt, random_pose(rng, 1.0, 3.0)), gt);
  EXPECT_LT(moved.rmse, 1e-9);
  EXPECT_LT(moved.sd, 1e-9);

  const Trajectory line = straight_line(10);
  Trajectory drift = line;
  for (std::size_t i = 5; i < drift.size(); ++i) drift.entries[i].pose.translation.x() += 0.1;
  const ErrorStats r = rpe_translation(drift, line);
  EXPECT_EQ(r.n, 9u);
  EXPECT_NEAR(r.rmse, std::sqrt(0.01 / 9.0), 1e-12);
  EXPECT_NEAR(r.rmse, 0.0333, 1e-4);
  expect_stats_consistent(r);
}

TEST(Rpe, InsufficientPoses) {
  const Trajectory t = straight_line(3);
  try {
    rpe_translation(t, t, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientPoses);
  }
  EXPECT_NO_THROW(rpe_translation(t, t, 2));
}

TEST(ErrorStats, RmseDecomposition) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> e;
    const int n = 1 + static_cast<int>(uniform(rng, 0, 100));
    for (int i = 0; i < n; ++i) e.push_back(uniform(rng, 0, 5));
    expect_stats_consistent(error_stats(e));
  }
}

TEST(TrajectoryText, IdentityLine) {
  std::istringstream in("# comment\n0.0 0 0 0 0 0 0 1\n");
  const Trajectory t = parse_trajectory(in);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.entries[0].timestamp, 0.0);
  EXPECT_LT((t.entries[0].pose.rotation - Mat3::Identity()).norm(), 1e-15);
  EXPECT_EQ(t.entries[0].pose.translation, Vec3::Zero());
}

TEST(TrajectoryText, Errors) {
  const auto code_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_trajectory(in, "t.txt");
    } catch (const Error& e) {
      return std::make_pair(e.code(), std::string(e.what()));
    }
    return std::make_pair(Errc::InvalidConfig, std::string("no error"));
  };
  const auto seven = code_of("0 0 0 0 0 0 0 1\n1 0 0 0 0 0 1\n");
  EXPECT_EQ(seven.first, Errc::ParseError);
  EXPECT_NE(seven.second.find(":2"), std::string::npos) << seven.second;
  EXPECT_EQ(code_of("1 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1\n").first, Errc::ParseError);
  EXPECT_EQ(code_of("0 0 0 x 0 0 0 1\n").first, Errc::ParseError);
}

TEST(TrajectoryText, RoundTrip) {
  std::mt19937_64 rng(11);
  const Trajectory t = random_trajectory(rng, 100, 0.033);
  const auto path = std::filesystem::temp_directory_path() / "fadslam_traj_roundtrip.txt";
  write_trajectory(t, path.string());
  const Trajectory back = read_trajectory(path.string());
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(back.entries[i].timestamp, t.entries[i].timestamp, 1e-9);
    EXPECT_LT(max_abs(back.entries[i].pose.translation - t.entries[i].pose.translation), 1e-9);
    EXPECT_LT(max_abs(back.entries[i].pose.rotation - t.entries[i].pose.rotation), 1e-9);
  }
}
