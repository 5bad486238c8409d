#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "intercept/depth_filter.hpp"
#include "intercept/sim/mission.hpp"
#include "support.hpp"

namespace intercept::sim {
namespace {

using std::numbers::pi;

TargetConfig tilted_target(Rng& rng) {
  TargetConfig t;
  t.a = rng.uniform(3, 30);
  t.speed = rng.uniform(0.5, 8);
  t.start_t = rng.uniform(-pi, pi);
  t.direction = rng.bernoulli(0.5) ? Direction::CW : Direction::CCW;
  t.pose = intercept::testing::random_transform(rng);
  return t;
}

TEST(ArcLengthTable, PerimeterOfUnitCurve) {
  // lemniscate constant times twice the half-width a*sqrt(2)
  const double exact = 2.0 * 2.62205755429211981 * std::numbers::sqrt2;
  EXPECT_NEAR(ArcLengthTable::unit().perimeter(), exact, 1e-5 * exact);
  const auto& tab = ArcLengthTable::unit();
  for (double s : {0.0, 0.3, 1.7, 2.6, 4.9}) EXPECT_NEAR(tab.length_at(tab.param_at(s)), s, 1e-9);
}

TEST(TargetPath, StartPoint) {
  Rng rng(51);
  for (int i = 0; i < 50; ++i) {
    const auto cfg = tilted_target(rng);
    EXPECT_LE((target_position(cfg, 0.0) - cfg.pose.apply(lemniscate_point(cfg.a, 0, cfg.start_t))).norm(), 1e-9);
  }
  EXPECT_THROW(target_position(TargetConfig{}, -1.0), InvalidInput);
}

TEST(TargetPath, ReturnsAfterOnePeriod) {
  Rng rng(52);
  for (int i = 0; i < 100; ++i) {
    const TargetPath path(tilted_target(rng));
    const double t0 = rng.uniform(0, 100);
    EXPECT_LE((path.position(t0 + path.period()) - path.position(t0)).norm(), 1e-6);
  }
}

TEST(TargetPath, GroundSpeedWithinOnePercent) {
  Rng rng(53);
  for (int i = 0; i < 5; ++i) {
    const auto cfg = tilted_target(rng);
    const TargetPath path(cfg);
    const double dt = 1e-3;
    for (double t = 0.0; t < path.period(); t += dt) {
      const double v = (path.position(t + dt) - path.position(t)).norm() / dt;
      ASSERT_NEAR(v, cfg.speed, 0.01 * cfg.speed) << "t=" << t;
    }
  }
}

TEST(TargetPath, StaysOnLemniscate) {
  Rng rng(54);
  for (int i = 0; i < 20; ++i) {
    const auto cfg = tilted_target(rng);
    const TargetPath path(cfg);
    const auto to_l = cfg.pose.inverse();
    for (int k = 0; k < 500; ++k) {
      const Point3 q = to_l.apply(path.position(rng.uniform(0, 3 * path.period())));
      ASSERT_LE(std::abs(lemniscate_residual(cfg.a, q.x(), q.y())), 1e-9 * std::pow(cfg.a, 4));
      ASSERT_LE(std::abs(q.z()), 1e-9 * cfg.a);
    }
  }
}

TEST(TargetPath, DirectionSetsParameterSense) {
  TargetConfig cfg;
  cfg.direction = Direction::CW;
  EXPECT_GT(TargetPath(cfg).param_at(0.1), TargetPath(cfg).param_at(0.0));
  cfg.direction = Direction::CCW;
  cfg.start_t = 1.0;
  EXPECT_LT(TargetPath(cfg).param_at(0.1), 1.0);
}

TEST(TargetPath, DistanceToPath) {
  TargetConfig cfg;
  cfg.pose = RigidTransform{};
  const TargetPath path(cfg);
  EXPECT_LT(path.distance_to_path(lemniscate_point(cfg.a, 0, 0.7)), 1e-3);
  EXPECT_NEAR(path.distance_to_path({cfg.a * std::numbers::sqrt2 + 2.0, 0, 0}), 2.0, 1e-9);
  EXPECT_NEAR(path.distance_to_path({0, 0, 3}), 3.0, 1e-9);
}

const RigidTransform kCamAtOrigin = camera_mount();

TEST(Sense, BehindCamera) {
  Rng rng(1);
  EXPECT_FALSE(sense({-5, 0, 0}, kCamAtOrigin, SensorConfig::noise_free(), rng));
}

TEST(Sense, NoiseFreeOnAxis) {
  Rng rng(1);
  const auto cfg = SensorConfig::noise_free();
  const auto d = sense({10, 0, 0}, kCamAtOrigin, cfg, rng);
  ASSERT_TRUE(d);
  EXPECT_NEAR(d->center_u, cfg.intrinsics.cx, 1e-9);
  EXPECT_NEAR(d->center_v, cfg.intrinsics.cy, 1e-9);
  EXPECT_FALSE(d->depth_out_of_range);
  const double half_bin = 0.5 * (cfg.range_max - cfg.range_min) / 40.0;
  EXPECT_NEAR(estimate_depth(d->patch, {}), 10.0, half_bin);
  EXPECT_NEAR(d->bbox.w, cfg.intrinsics.fx * cfg.target_diagonal / 10.0, 1e-9);
}

TEST(Sense, BeyondRangeFlagged) {
  Rng rng(1);
  auto cfg = SensorConfig::noise_free();
  cfg.max_detection_range = 1000.0;
  const auto d = sense({18, 0, 0}, kCamAtOrigin, cfg, rng);
  ASSERT_TRUE(d);
  EXPECT_TRUE(d->depth_out_of_range);
  const double frac = d->bbox.area() / (cfg.intrinsics.width * cfg.intrinsics.height);
  EXPECT_EQ(out_of_range_depth(frac, 0.25, cfg.range_min, cfg.range_max), cfg.range_max);
}

TEST(Sense, OnlyInsideFrustum) {
  Rng rng(55);
  auto cfg = SensorConfig::noise_free();
  cfg.max_detection_range = 1e12;  // detection probability ~1 at every depth
  int inside = 0;
  for (int i = 0; i < 5000; ++i) {
    const Point3 target(rng.uniform(-5, 40), rng.uniform(-30, 30), rng.uniform(-20, 20));
    const auto px = project(kCamAtOrigin.inverse().apply(target), cfg.intrinsics);
    const bool visible = px && in_image(*px, cfg.intrinsics);
    EXPECT_EQ(sense(target, kCamAtOrigin, cfg, rng).has_value(), visible);
    inside += visible;
  }
  EXPECT_GT(inside, 500);
}

TEST(Sense, DetectionRateMatchesProbability) {
  Rng rng(56);
  SensorConfig cfg;
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += sense({8, 0, 0}, kCamAtOrigin, cfg, rng).has_value();
  EXPECT_NEAR(hits / 10000.0, cfg.detection_probability, 0.01);
}

TEST(StepInterceptor, Examples) {
  const InterceptorConfig cfg;
  const Pose s({1, 2, 3}, 0.5);
  const auto same = step_interceptor(s, s, cfg, 0.02);
  EXPECT_EQ(same.position, s.position);
  EXPECT_EQ(same.yaw, s.yaw);

  const auto far = step_interceptor(Pose({0, 0, 0}, 0), Pose({10, 0, 0}, 0), cfg, 1.0);
  EXPECT_NEAR(far.position.x(), 4.5, 1e-12);
  EXPECT_EQ(far.position.y(), 0.0);

  const Pose near_ref({0.01, 0, 0}, 0.0);
  EXPECT_EQ(step_interceptor(Pose({0, 0, 0}, 0), near_ref, cfg, 0.02).position, near_ref.position);
  EXPECT_THROW(step_interceptor(s, s, cfg, 0.0), InvalidInput);
}

TEST(StepInterceptor, LimitsNeverExceeded) {
  Rng rng(57);
  const InterceptorConfig cfg;
  Pose s({0, 0, 0}, 0.0);
  for (int i = 0; i < 10000; ++i) {
    const Pose ref(s.position + intercept::testing::random_point(rng, 3.0), rng.uniform(-pi, pi));
    const auto next = step_interceptor(s, ref, cfg, 0.02);
    ASSERT_LE((next.position - s.position).norm(), cfg.max_speed * 0.02 + 1e-12);
    ASSERT_LE(std::abs(wrap_angle(next.yaw - s.yaw)), cfg.max_yaw_rate * 0.02 + 1e-12);
    s = next;
  }
}

MissionConfig noise_free_mission() {
  MissionConfig cfg;
  cfg.target.speed = 2.0;
  cfg.sensor = SensorConfig::noise_free();
  // exact data: exact extremes, a denser reference curve and a tight gate
  cfg.pipeline.extreme_min = 1;
  cfg.pipeline.extreme_fraction = 0.0;
  cfg.pipeline.k = 400;
  cfg.pipeline.threshold = 0.03;
  return cfg;
}

TEST(Mission, NoiseFreeEndToEnd) {
  const auto cfg = noise_free_mission();
  for (std::uint64_t seed : {1000u, 1001u, 1002u}) {
    const auto r = run_mission(cfg, seed);
    EXPECT_TRUE(r.success) << seed;
    EXPECT_LT(r.intercept_error, 0.05) << seed;
    EXPECT_LT(r.focal_error, 0.05) << seed;
    EXPECT_LT(r.loops_used, cfg.pipeline.max_loops);
    ASSERT_TRUE(r.intercept);
    EXPECT_EQ(r.intercept->direction, r.target.direction) << seed;
  }
}

TEST(Mission, DeterministicPerSeed) {
  MissionConfig cfg;
  for (std::uint64_t seed : {7u, 8u}) {
    const auto a = run_mission(cfg, seed);
    const auto b = run_mission(cfg, seed);
    EXPECT_EQ(a.mode_log, b.mode_log);
    EXPECT_EQ(a.success, b.success);
    EXPECT_EQ(std::memcmp(&a.intercept_error, &b.intercept_error, sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(&a.focal_error, &b.focal_error, sizeof(double)), 0);
    EXPECT_EQ(a.loops_used, b.loops_used);
    EXPECT_EQ(a.duration, b.duration);
    ASSERT_EQ(a.observations.size(), b.observations.size());
    for (std::size_t i = 0; i < a.observations.size(); ++i) {
      ASSERT_EQ(a.observations[i].t, b.observations[i].t);
      ASSERT_EQ(a.observations[i].p, b.observations[i].p);
    }
  }
}

TEST(Mission, SeedsDiffer) {
  MissionConfig cfg;
  const auto a = run_mission(cfg, 11);
  const auto b = run_mission(cfg, 12);
  EXPECT_NE(a.target.pose.translation(), b.target.pose.translation());
}

TEST(Mission, ModeLogFollowsStateMachine) {
  MissionConfig cfg;
  const auto r = run_mission(cfg, 21);
  ASSERT_GE(r.mode_log.size(), 3u);
  EXPECT_EQ(r.mode_log[0].from, Mode::Idle);
  Mode m = Mode::Idle;
  double last = 0.0;
  for (const auto& tr : r.mode_log) {
    EXPECT_EQ(tr.from, m);
    EXPECT_EQ(step_mode(tr.from, {tr.trigger, tr.timestamp}), tr.to);
    EXPECT_GE(tr.timestamp, last);
    last = tr.timestamp;
    m = tr.to;
  }
}

TEST(Mission, InterceptorSpeedCapInTrace) {
  MissionConfig cfg;
  std::vector<TraceRecord> trace;
  run_mission(cfg, 31, [&](const TraceRecord& rec) { trace.push_back(rec); });
  ASSERT_GT(trace.size(), 100u);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const double dt = trace[i].t - trace[i - 1].t;
    ASSERT_GT(dt, 0.0);
    ASSERT_LE((trace[i].follower.position - trace[i - 1].follower.position).norm(),
              cfg.interceptor.max_speed * dt + 1e-9)
        << "t=" << trace[i].t;
  }
}

TEST(Mission, FollowInterruptionsAtHighSpeed) {
  MissionConfig cfg;
  cfg.target.speed = 6.0;
  int with_cycle = 0;
  for (std::uint64_t seed = 1000; seed < 1015; ++seed) {
    const auto r = run_mission(cfg, seed);
    const auto& log = r.mode_log;
    for (std::size_t i = 0; i + 1 < log.size(); ++i) {
      if (log[i].from == Mode::Follow && log[i].to == Mode::Search && log[i + 1].to == Mode::Follow) {
        ++with_cycle;
        break;
      }
    }
  }
  EXPECT_GE(with_cycle, 1);
}

TEST(Mission, InvalidConfigRejected) {
  MissionConfig cfg;
  cfg.target.speed = -1.0;
  EXPECT_THROW(run_mission(cfg, 1), InvalidInput);
  cfg = MissionConfig{};
  cfg.sensor.range_max = 20.0;  // depth filter range no longer matches
  EXPECT_THROW(run_mission(cfg, 1), InvalidInput);
}

}  // namespace
}  // namespace intercept::sim
