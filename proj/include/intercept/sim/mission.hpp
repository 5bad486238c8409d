#pragma once

// Closed-loop mission: target on a lemniscate, kinematic interceptor, synthetic
// sensor, and the full perception -> estimation -> guidance pipeline driven at
// the control rate. A mission is a pure function of (config, seed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "intercept/errors.hpp"
#include "intercept/geometry.hpp"
#include "intercept/guidance.hpp"
#include "intercept/interception.hpp"
#include "intercept/lemniscate.hpp"
#include "intercept/rng.hpp"
#include "intercept/sim/kinematics.hpp"
#include "intercept/sim/sensor.hpp"
#include "intercept/sim/target.hpp"
#include "intercept/tracker.hpp"

namespace intercept::sim {

struct PipelineConfig {
  TrackerConfig tracker;
  ServoConfig servo;
  DirectionVoteConfig direction;
  double threshold = 0.17;  // d_H / a below which the estimate is accepted
  std::size_t k = 100;      // curve samples for the Hausdorff check
  double extreme_fraction = 0.05;
  std::size_t extreme_min = 3;
  std::size_t min_fit_points = 10;
  double min_fit_span = 2.0;  // s
  double rearm_factor = 2.0;  // refit a frozen estimate once d_H / a > rearm_factor * threshold
  double takeoff_duration = 3.0;
  double search_altitude = 12.0;
  double search_spacing = 20.0;
  double local_search_yaw_rate = 0.75;
  double waypoint_tolerance = 0.5;
  double arrival_tolerance = 0.5;
  double arrival_yaw_tolerance = 0.1;
  double intercept_timeout = 120.0;
  double max_loops = 3.0;          // convergence deadline, in target loops after first contact
  double search_timeout = 300.0;   // give up if the target is never found

  void validate() const {
    servo.validate();
    if (!(threshold > 0.0)) throw InvalidInput("threshold must be positive");
    if (k < 4) throw InvalidInput("k must be at least 4");
    if (!(extreme_fraction >= 0.0 && extreme_fraction <= 1.0) || extreme_min < 1) {
      throw InvalidInput("invalid robust-extreme window");
    }
    if (min_fit_points < 4) throw InvalidInput("min_fit_points must be at least 4");
    if (tracker.miss_limit < 1 || tracker.confirm_count < 1) throw InvalidInput("tracker counts must be >= 1");
    if (tracker.depth.bins < 3) throw InvalidInput("depth filter needs at least 3 bins");
    if (!(tracker.kalman.sigma_meas > 0.0 && tracker.kalman.sigma_acc > 0.0)) {
      throw InvalidInput("Kalman noise must be positive");
    }
    if (!(takeoff_duration > 0.0 && search_spacing > 0.0 && intercept_timeout > 0.0 &&
          max_loops > 0.0 && search_timeout > 0.0 && rearm_factor >= 1.0)) {
      throw InvalidInput("mission timing parameters must be positive");
    }
  }
};

struct ScenarioConfig {
  // When set, the seed also draws the target's yaw, tilt, centre jitter,
  // start parameter and direction on top of the configured pose.
  bool randomize = true;
  double max_tilt_deg = 15.0;
  double center_jitter = 5.0;
  double altitude_jitter = 2.0;
  Point3 follower_start{5.0, 5.0, 0.0};
};

struct MissionConfig {
  ArenaConfig arena;
  TargetConfig target;
  SensorConfig sensor;
  InterceptorConfig interceptor;
  PipelineConfig pipeline;
  ScenarioConfig scenario;

  void validate() const {
    arena.validate();
    target.validate();
    sensor.validate();
    interceptor.validate();
    pipeline.validate();
    if (sensor.rate > interceptor.control_rate) {
      throw InvalidInput("sensor rate cannot exceed the control rate");
    }
    if (pipeline.tracker.depth.range_min != sensor.range_min ||
        pipeline.tracker.depth.range_max != sensor.range_max) {
      throw InvalidInput("depth filter range must match the sensor range");
    }
    if (!(scenario.max_tilt_deg >= 0.0 && scenario.max_tilt_deg < 90.0 &&
          scenario.center_jitter >= 0.0 && scenario.altitude_jitter >= 0.0)) {
      throw InvalidInput("invalid scenario randomisation");
    }
  }
};

struct TraceRecord {
  double t = 0.0;
  Mode mode = Mode::Idle;
  Pose follower;
  Point3 target = Point3::Zero();
  std::optional<Point3> estimate;
};

using TraceSink = std::function<void(const TraceRecord&)>;

struct MissionResult {
  bool success = false;
  bool converged = false;
  bool arrived = false;
  double loops_used = 0.0;
  double intercept_error = std::numeric_limits<double>::quiet_NaN();
  double focal_error = std::numeric_limits<double>::quiet_NaN();
  double estimated_a = std::numeric_limits<double>::quiet_NaN();
  double final_dh = std::numeric_limits<double>::quiet_NaN();
  double final_ratio = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_observations = 0;
  double duration = 0.0;
  std::size_t follow_interruptions = 0;
  std::optional<InterceptPose> intercept;
  std::vector<HistoryEntry> history;
  std::vector<ModeTransition> mode_log;
  std::vector<TimedPoint> observations;  // buffer fed to the estimator
  TargetConfig target;  // the (possibly randomised) true trajectory
};

struct PointFit {
  LemniscateEstimate est;
  ConvergenceReport report;
};

/// Estimate plus Hausdorff gate on a point buffer with the pipeline's k,
/// extreme window and threshold. nullopt when the buffer is degenerate.
inline std::optional<PointFit> fit_points(std::span<const Point3> points, const PipelineConfig& pc) {
  try {
    const std::size_t m = extreme_window(points.size(), pc.extreme_fraction, pc.extreme_min);
    PointFit f{estimate(points, pc.k, m), {}};
    f.report = check_convergence(points, f.est, pc.threshold);
    return f;
  } catch (const DegenerateGeometry&) {
    return std::nullopt;
  }
}

/// Direction from the most recent single-lobe run, then the intercept pose.
/// nullopt while the direction is undecided.
inline std::optional<InterceptPose> plan_intercept(const LemniscateEstimate& est,
                                                   std::span<const Point3> points,
                                                   const DirectionVoteConfig& cfg) {
  const RigidTransform to_local = est.pose.inverse();
  std::vector<Point3> local;
  local.reserve(points.size());
  for (const auto& p : points) local.push_back(to_local.apply(p));
  const auto run = recent_lobe_run(local, est.shift_x);
  try {
    return intercept_pose(est, identify_direction(run, est.a, est.shift_x, cfg));
  } catch (const UndecidedDirection&) {
    return std::nullopt;
  }
}

/// Target configuration actually flown for this seed.
inline TargetConfig scenario_target(const MissionConfig& cfg, std::uint64_t seed) {
  TargetConfig t = cfg.target;
  if (!cfg.scenario.randomize) return t;
  Rng rng = Rng(seed).stream(1);
  const double yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double tilt = rng.uniform(0.0, cfg.scenario.max_tilt_deg) * std::numbers::pi / 180.0;
  const double tilt_axis = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const Point3 jitter(rng.uniform(-1.0, 1.0) * cfg.scenario.center_jitter,
                      rng.uniform(-1.0, 1.0) * cfg.scenario.center_jitter,
                      rng.uniform(-1.0, 1.0) * cfg.scenario.altitude_jitter);
  t.start_t = rng.uniform(0.0, 2.0 * std::numbers::pi);
  t.direction = rng.bernoulli(0.5) ? Direction::CW : Direction::CCW;
  const Eigen::Matrix3d tilt_rot =
      Eigen::AngleAxisd(tilt, Eigen::Vector3d(std::cos(tilt_axis), std::sin(tilt_axis), 0.0))
          .toRotationMatrix();
  t.pose = RigidTransform(tilt_rot * yaw_rotation(yaw) * t.pose.rotation(),
                          t.pose.translation() + jitter);
  return t;
}

namespace detail {

class Mission {
 public:
  Mission(const MissionConfig& cfg, std::uint64_t seed, const TraceSink* trace)
      : cfg_(cfg),
        path_(scenario_target(cfg, seed)),
        sensor_rng_(Rng(seed).stream(2)),
        tracker_(cfg.pipeline.tracker),
        waypoints_(search_waypoints(cfg.arena, cfg.pipeline.search_spacing, cfg.pipeline.search_altitude)),
        mount_(camera_mount(cfg.sensor.mount_offset)),
        trace_(trace) {
    follower_ = Pose(cfg.scenario.follower_start, 0.0);
    result_.target = path_.config();
  }

  MissionResult run() {
    const double dt = 1.0 / cfg_.interceptor.control_rate;
    const double frame_period = 1.0 / cfg_.sensor.rate;
    double next_frame = 0.0;
    emit(EventKind::MissionStart, 0.0);

    for (std::uint64_t tick = 1;; ++tick) {
      const double now = static_cast<double>(tick) * dt;
      const Point3 target = path_.position(now);
      tracker_.predict_to(now);

      if (now >= next_frame) {
        next_frame += frame_period;
        process_frame(now, target);
      }

      follower_ = step_interceptor(follower_, reference(), cfg_.interceptor, dt);

      if (trace_ && *trace_) (*trace_)({now, exec_.mode(), follower_, target, tracker_.estimate()});
      if (check_termination(now)) break;
    }

    result_.mode_log = exec_.log();
    result_.n_observations = observations_.size();
    result_.observations = observations_.points();
    return result_;
  }

 private:
  void emit(EventKind kind, double now) {
    const Mode before = exec_.mode();
    exec_.handle({kind, now});
    const Mode after = exec_.mode();
    if (before == Mode::Follow && after == Mode::Search) ++result_.follow_interruptions;
    if (after == Mode::Follow && !first_contact_) first_contact_ = now;
    if (after == Mode::Intercept) intercept_start_ = now;
  }

  SensorGeometry geometry() const {
    return {cfg_.sensor.intrinsics, mount_, follower_.transform()};
  }

  void process_frame(double now, const Point3& target) {
    const Mode mode = exec_.mode();
    if (mode != Mode::Search && mode != Mode::Follow && mode != Mode::Intercept) return;
    const SensorGeometry geo = geometry();
    const auto window = tracker_.roi_window(geo);
    const auto detections =
        sense_frame(target, geo.camera_in_global(), cfg_.sensor, sensor_rng_, now, window);
    const TrackStepResult step = tracker_.step(detections, now, geo);

    if (step.newly_confirmed) emit(EventKind::TargetDetected, now);
    if (step.lost) {
      last_seen_ = last_track_;
      emit(EventKind::TargetLost, now);
    }
    if (const auto& tr = tracker_.track()) last_track_ = tr->position();

    for (const auto& m : step.confirmed) {
      observations_.add(m.t, m.p);
      on_new_observation(now);
    }
  }

  void on_new_observation(double now) {
    const auto& pc = cfg_.pipeline;
    if (observations_.size() < pc.min_fit_points || observations_.time_span() < pc.min_fit_span) return;

    if (intercept_) {
      // Frozen: only refit if the data has drifted away from the estimate.
      const double d_h = hausdorff_bidirectional(observations_.positions(), estimate_->samples_G);
      if (d_h / estimate_->a <= pc.rearm_factor * pc.threshold) return;
      if (auto refit = try_fit()) {
        if (refit->report.converged) {
          if (auto pose = try_intercept(refit->est)) {
            estimate_ = refit->est;
            intercept_ = pose;
            record_intercept();
          }
        }
      }
      return;
    }

    auto fit = try_fit();
    if (!fit) return;
    estimate_ = fit->est;
    result_.history.push_back({observations_.size(), fit->report.d_h});
    result_.final_dh = fit->report.d_h;
    result_.final_ratio = fit->report.ratio;
    result_.estimated_a = fit->est.a;
    result_.focal_error = std::abs(fit->est.a - path_.config().a);
    if (!fit->report.converged) return;
    if (exec_.mode() != Mode::Follow) return;

    if (auto pose = try_intercept(*estimate_)) {
      intercept_ = pose;
      result_.converged = true;
      result_.loops_used = loops_since_contact(now);
      record_intercept();
      emit(EventKind::EstimateConverged, now);
    }
  }

  std::optional<PointFit> try_fit() const { return fit_points(observations_.positions(), cfg_.pipeline); }

  std::optional<InterceptPose> try_intercept(const LemniscateEstimate& est) const {
    return plan_intercept(est, observations_.positions(), cfg_.pipeline.direction);
  }

  void record_intercept() {
    result_.intercept = intercept_;
    result_.intercept_error = path_.distance_to_path(intercept_->position_G);
    result_.estimated_a = estimate_->a;
    result_.focal_error = std::abs(estimate_->a - path_.config().a);
  }

  double loops_since_contact(double now) const {
    return first_contact_ ? (now - *first_contact_) / path_.period() : 0.0;
  }

  Pose clamp_altitude(Pose p) const {
    p.position.z() = std::clamp(p.position.z(), cfg_.arena.min_altitude, cfg_.arena.max_altitude);
    return p;
  }

  Pose reference() {
    const auto& pc = cfg_.pipeline;
    switch (exec_.mode()) {
      case Mode::Idle:
        return follower_;
      case Mode::Takeoff: {
        Pose ref = follower_;
        const double climb = pc.search_altitude / pc.takeoff_duration / cfg_.interceptor.control_rate;
        ref.position.z() = std::min(pc.search_altitude, follower_.position.z() + climb);
        return ref;
      }
      case Mode::Search:
        return search_reference();
      case Mode::Follow: {
        const auto est = tracker_.estimate();
        if (!est) return follower_;
        const Point3 target_F = follower_.transform().inverse().apply(*est);
        return clamp_altitude(pbvs_step(follower_, target_F, pc.servo));
      }
      case Mode::Intercept:
        return intercept_->pose();
    }
    return follower_;
  }

  Pose search_reference() {
    const auto& pc = cfg_.pipeline;
    if (last_seen_ && observations_.size() >= pc.min_fit_points) {
      // Local search: hover over the centre of what has been seen and turn.
      Point3 centroid = Point3::Zero();
      for (const auto& p : observations_.positions()) centroid += p;
      centroid /= static_cast<double>(observations_.size());
      const double turn = pc.local_search_yaw_rate / cfg_.interceptor.control_rate;
      return clamp_altitude(Pose(centroid, follower_.yaw + turn));
    }
    Pose wp = waypoints_[waypoint_];
    const Point3 delta = wp.position - follower_.position;
    if (delta.norm() <= pc.waypoint_tolerance) {
      waypoint_ = (waypoint_ + 1) % waypoints_.size();
      wp = waypoints_[waypoint_];
    }
    const Point3 to_wp = wp.position - follower_.position;
    if (to_wp.head<2>().norm() > 1e-6) wp.yaw = std::atan2(to_wp.y(), to_wp.x());
    return wp;
  }

  bool check_termination(double now) {
    const auto& pc = cfg_.pipeline;
    result_.duration = now;
    switch (exec_.mode()) {
      case Mode::Takeoff:
        if (now >= pc.takeoff_duration) emit(EventKind::TakeoffComplete, now);
        return false;
      case Mode::Search:
      case Mode::Follow:
        if (!first_contact_) return now >= pc.search_timeout;
        if (loops_since_contact(now) > pc.max_loops) {
          result_.loops_used = loops_since_contact(now);
          return true;
        }
        return false;
      case Mode::Intercept: {
        const Pose goal = intercept_->pose();
        const bool at_goal = (follower_.position - goal.position).norm() <= pc.arrival_tolerance &&
                             std::abs(wrap_angle(follower_.yaw - goal.yaw)) <= pc.arrival_yaw_tolerance;
        if (at_goal) {
          result_.arrived = true;
          result_.success = result_.converged && result_.loops_used <= pc.max_loops;
          return true;
        }
        return now - *intercept_start_ >= pc.intercept_timeout;
      }
      case Mode::Idle:
        return false;
    }
    return false;
  }

  const MissionConfig& cfg_;
  TargetPath path_;
  Rng sensor_rng_;
  Tracker tracker_;
  std::vector<Pose> waypoints_;
  std::size_t waypoint_ = 0;
  RigidTransform mount_;
  const TraceSink* trace_;

  MissionExecutive exec_;
  Pose follower_;
  ObservationSet observations_;
  std::optional<LemniscateEstimate> estimate_;
  std::optional<InterceptPose> intercept_;
  std::optional<double> first_contact_;
  std::optional<double> intercept_start_;
  std::optional<Point3> last_track_;
  std::optional<Point3> last_seen_;
  MissionResult result_;
};

}  // namespace detail

inline MissionResult run_mission(const MissionConfig& cfg, std::uint64_t seed,
                                 const TraceSink& trace = {}) {
  cfg.validate();
  detail::Mission mission(cfg, seed, &trace);
  return mission.run();
}

}  // namespace intercept::sim
