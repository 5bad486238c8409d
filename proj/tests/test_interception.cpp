#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "intercept/interception.hpp"
#include "support.hpp"

namespace intercept {
namespace {

using std::numbers::pi;

double brute_directed(const std::vector<Point3>& x, const std::vector<Point3>& y) {
  double worst = 0.0;
  for (const auto& p : x) {
    double best = INFINITY;
    for (const auto& q : y) best = std::min(best, (p - q).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

std::vector<Point3> random_set(Rng& rng, std::size_t n) {
  std::vector<Point3> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(testing::random_point(rng));
  return s;
}

LemniscateEstimate truth_estimate(double a, const RigidTransform& pose, std::size_t k = 100) {
  LemniscateEstimate est;
  est.a = a;
  est.pose = pose;
  est.k = k;
  for (const auto& p : sample_lemniscate(a, 0.0, k)) est.samples_G.push_back(pose.apply(p));
  return est;
}

/// Points on one lobe of the curve in L, in order of increasing t.
std::vector<Point3> lobe_run(double a, double t0, double t1, int n) {
  std::vector<Point3> out;
  for (int i = 0; i < n; ++i) out.push_back(lemniscate_point(a, 0.0, t0 + (t1 - t0) * i / (n - 1)));
  return out;
}

TEST(Hausdorff, Examples) {
  const std::vector<Point3> x{{0, 0, 0}};
  const std::vector<Point3> y{{3, 4, 0}};
  EXPECT_EQ(hausdorff_directed(x, y), 5.0);
  Rng rng(31);
  const auto s = random_set(rng, 20);
  EXPECT_EQ(hausdorff_bidirectional(s, s), 0.0);
  EXPECT_THROW(hausdorff_directed({}, y), InvalidInput);
  EXPECT_THROW(hausdorff_bidirectional(x, {}), InvalidInput);
}

TEST(Hausdorff, EqualsBruteForce) {
  Rng rng(32);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_set(rng, 20);
    const auto y = random_set(rng, 30);
    ASSERT_EQ(hausdorff_directed(x, y), brute_directed(x, y));
    ASSERT_EQ(hausdorff_bidirectional(x, y), std::max(brute_directed(x, y), brute_directed(y, x)));
  }
}

TEST(Hausdorff, SubsetWithOutlierDominatedByReverseDirection) {
  Rng rng(33);
  const auto x = random_set(rng, 25);
  auto y = x;
  y.push_back({100, 0, 0});
  EXPECT_EQ(hausdorff_directed(x, y), 0.0);
  EXPECT_EQ(hausdorff_bidirectional(x, y), hausdorff_directed(y, x));
  EXPECT_EQ(hausdorff_bidirectional(x, y), brute_directed(y, x));
}

TEST(Hausdorff, MetricProperties) {
  Rng rng(34);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_set(rng, 8);
    const auto y = random_set(rng, 10);
    const auto z = random_set(rng, 12);
    EXPECT_EQ(hausdorff_bidirectional(x, y), hausdorff_bidirectional(y, x));
    EXPECT_GT(hausdorff_bidirectional(x, y), 0.0);
    EXPECT_LE(hausdorff_bidirectional(x, z),
              hausdorff_bidirectional(x, y) + hausdorff_bidirectional(y, z) + 1e-12);
  }
}

TEST(Hausdorff, SetSemantics) {
  // Permutations and duplicates do not change the distance.
  Rng rng(35);
  auto x = random_set(rng, 15);
  auto y = x;
  std::reverse(y.begin(), y.end());
  y.push_back(y.front());
  EXPECT_EQ(hausdorff_bidirectional(x, y), 0.0);
}

TEST(CheckConvergence, ExactSamplesConverge) {
  const auto est = truth_estimate(10.0, RigidTransform{});
  const auto rep = check_convergence(est.samples_G, est, 0.15);
  EXPECT_EQ(rep.d_h, 0.0);
  EXPECT_TRUE(rep.converged);
  ASSERT_EQ(rep.history.size(), 1u);
  EXPECT_EQ(rep.history[0].point_count, est.samples_G.size());
}

TEST(CheckConvergence, FarMeasurementFails) {
  const auto est = truth_estimate(10.0, RigidTransform{});
  auto meas = est.samples_G;
  meas.push_back(Point3(10.0 * std::numbers::sqrt2 + 5.0, 0, 0));  // 0.5 a beyond the tip
  const auto rep = check_convergence(meas, est, 0.15);
  EXPECT_NEAR(rep.d_h, 5.0, 1e-12);
  EXPECT_NEAR(rep.ratio, 0.5, 1e-12);
  EXPECT_FALSE(rep.converged);
  EXPECT_THROW(check_convergence({}, est, 0.15), InvalidInput);
}

TEST(CheckConvergence, RatioConsistent) {
  Rng rng(36);
  for (int i = 0; i < 100; ++i) {
    const auto est = truth_estimate(rng.uniform(2, 30), testing::random_transform(rng));
    const auto meas = random_set(rng, 30);
    const double thr = rng.uniform(0.01, 1.0);
    const auto rep = check_convergence(meas, est, thr);
    EXPECT_EQ(rep.ratio, rep.d_h / est.a);
    EXPECT_EQ(rep.converged, rep.ratio < thr);
  }
}

TEST(IdentifyDirection, IncreasingParameterIsCw) {
  for (double a : {5.0, 20.0}) {
    // +x lobe and -x lobe, t increasing
    EXPECT_EQ(identify_direction(lobe_run(a, -1.2, 1.2, 20), a, 0.0), Direction::CW);
    EXPECT_EQ(identify_direction(lobe_run(a, pi - 1.2, pi + 1.2, 20), a, 0.0), Direction::CW);
  }
}

TEST(IdentifyDirection, ReversedTimeIsCcw) {
  auto run = lobe_run(10.0, -1.2, 1.2, 20);
  std::reverse(run.begin(), run.end());
  EXPECT_EQ(identify_direction(run, 10.0, 0.0), Direction::CCW);
}

TEST(IdentifyDirection, AntisymmetricUnderTimeReversal) {
  Rng rng(37);
  int decided = 0;
  for (int i = 0; i < 500; ++i) {
    const double a = rng.uniform(3, 25);
    const double shift = rng.uniform(-2, 2);
    const double centre = rng.bernoulli(0.5) ? 0.0 : pi;
    const double span = rng.uniform(0.3, 1.5);
    std::vector<Point3> run;
    for (int k = 0; k < 15; ++k) {
      const double t = centre - span + 2 * span * k / 14.0;
      run.push_back(lemniscate_point(a, shift, t) + 0.05 * a * Point3(rng.normal(), rng.normal(), 0));
    }
    auto rev = run;
    std::reverse(rev.begin(), rev.end());
    Direction fwd{}, back{};
    try {
      fwd = identify_direction(run, a, shift);
    } catch (const UndecidedDirection&) {
      EXPECT_THROW(identify_direction(rev, a, shift), UndecidedDirection);
      continue;
    }
    back = identify_direction(rev, a, shift);
    EXPECT_NE(fwd, back);
    ++decided;
  }
  EXPECT_GT(decided, 400);
}

TEST(IdentifyDirection, Undecided) {
  const std::vector<Point3> collinear{{12, 0, 0}, {13, 0, 0}, {14, 0, 0}, {15, 0, 0}, {16, 0, 0}, {17, 0, 0}};
  EXPECT_THROW(identify_direction(collinear, 10.0, 0.0), UndecidedDirection);
  EXPECT_THROW(identify_direction(lobe_run(10.0, 0.0, 0.1, 2), 10.0, 0.0), UndecidedDirection);
}

TEST(RecentLobeRun, TrailingSameSide) {
  const std::vector<Point3> pts{{1, 0, 0}, {-1, 0, 0}, {-2, 0, 0}, {3, 0, 0}, {4, 0, 0}};
  EXPECT_EQ(recent_lobe_run(pts, 0.0).size(), 2u);
  EXPECT_EQ(recent_lobe_run(pts, 3.5).size(), 1u);
  EXPECT_TRUE(recent_lobe_run({}, 0.0).empty());
}

TEST(InterceptPose, CwExampleTenMetres) {
  const auto est = truth_estimate(10.0, RigidTransform{});
  const auto ip = intercept_pose(est, Direction::CW);
  EXPECT_EQ(ip.t_i, 0.75 * pi);
  EXPECT_EQ(ip.t_t, 0.25 * pi);
  EXPECT_LE((ip.position_G - Point3(-20.0 / 3.0, -10.0 * std::sqrt(2.0) / 3.0, 0)).norm(), 1e-12);
  // toward point (20/3, 10*sqrt2/3)
  EXPECT_NEAR(ip.yaw_G, std::atan2(20.0 * std::sqrt(2.0) / 3.0, 40.0 / 3.0), 1e-12);
  EXPECT_NEAR(ip.yaw_G, 0.6155, 1e-4);
}

TEST(InterceptPose, CwCcwSymmetry) {
  Rng rng(38);
  for (int i = 0; i < 100; ++i) {
    auto est = truth_estimate(rng.uniform(2, 30), testing::random_transform(rng, 20.0));
    est.pose = RigidTransform(Eigen::AngleAxisd(rng.uniform(-pi, pi), Point3::UnitZ()).toRotationMatrix(),
                              testing::random_point(rng));
    const auto cw = intercept_pose(est, Direction::CW);
    const auto ccw = intercept_pose(est, Direction::CCW);
    EXPECT_EQ(cw.t_i, ccw.t_t);
    EXPECT_EQ(cw.t_t, ccw.t_i);
    EXPECT_NEAR(std::abs(wrap_angle(cw.yaw_G - ccw.yaw_G)), pi, 1e-9);
    // CCW start is the CW look-at point
    EXPECT_LE((ccw.position_G - est.pose.apply(lemniscate_point(est.a, 0.0, cw.t_t))).norm(), 1e-9);
  }
}

TEST(InterceptPose, IdentityPoseMatchesLocal) {
  const auto est = truth_estimate(6.0, RigidTransform{});
  const auto ip = intercept_pose(est, Direction::CCW);
  EXPECT_LE((ip.position_G - lemniscate_point(6.0, 0.0, 0.25 * pi)).norm(), 0.0);
}

TEST(InterceptPose, OnEstimatedCurve) {
  Rng rng(39);
  for (int i = 0; i < 200; ++i) {
    LemniscateEstimate est = truth_estimate(rng.uniform(1, 40), testing::random_transform(rng));
    est.shift_x = rng.uniform(-3, 3);
    for (Direction d : {Direction::CW, Direction::CCW}) {
      const auto ip = intercept_pose(est, d);
      const Point3 q = est.pose.inverse().apply(ip.position_G);
      EXPECT_LE(std::abs(lemniscate_residual(est.a, q.x() - est.shift_x, q.y())), 1e-9 * std::pow(est.a, 4));
      EXPECT_GT(ip.yaw_G, -pi);
      EXPECT_LE(ip.yaw_G, pi);
    }
  }
}

TEST(InterceptPose, NoiseFreeEstimateLandsOnTruePath) {
  Rng rng(40);
  for (int i = 0; i < 50; ++i) {
    const double a = rng.uniform(5, 30);
    const auto truth = testing::random_transform(rng);
    std::vector<Point3> pts;
    for (const auto& p : sample_lemniscate(a, 0.0, 500)) pts.push_back(truth.apply(p));
    const auto est = estimate(pts, 100, 1);
    ASSERT_TRUE(check_convergence(pts, est, 0.15).converged);
    for (Direction d : {Direction::CW, Direction::CCW}) {
      const Point3 q = truth.inverse().apply(intercept_pose(est, d).position_G);
      // Nearest of the four symmetric images of the intercept parameter on the true curve.
      double best = INFINITY;
      for (double t : {0.25 * pi, 0.75 * pi, 1.25 * pi, 1.75 * pi}) {
        best = std::min(best, (q - lemniscate_point(a, 0.0, t)).norm());
      }
      EXPECT_LT(best, 1e-6);
    }
  }
}

TEST(InterceptPose, FacesIncomingTarget) {
  // A target moving with increasing t (CW) passes the intercept point heading
  // toward the interceptor, so the interceptor yaw opposes the target velocity.
  const double a = 10.0;
  const auto est = truth_estimate(a, RigidTransform{});
  const auto ip = intercept_pose(est, Direction::CW);
  const double h = 1e-6;
  const Point3 vel = lemniscate_point(a, 0, ip.t_i + h) - lemniscate_point(a, 0, ip.t_i - h);
  const Point3 facing(std::cos(ip.yaw_G), std::sin(ip.yaw_G), 0);
  EXPECT_LT(facing.dot(vel.normalized()), -0.9);
}

}  // namespace
}  // namespace intercept
