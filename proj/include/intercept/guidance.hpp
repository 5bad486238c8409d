#pragma once

// Position-based visual servoing references and the Follow-and-Intercept
// mission state machine.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "intercept/errors.hpp"
#include "intercept/geometry.hpp"

namespace intercept {

struct ServoConfig {
  // x_offset is the negative standoff: the fixed point keeps the target 7 m
  // ahead of the follower along its own x axis.
  Point3 offset{-7.0, 0.0, 0.0};
  std::array<bool, 3> active_axes{true, true, true};
  bool yaw_control = true;

  void validate() const {
    if (!is_finite(offset)) throw InvalidInput("servo offsets must be finite");
    if (!active_axes[0] && !active_axes[1] && !active_axes[2]) {
      throw InvalidInput("at least one servo axis must be active");
    }
  }
};

/// psi(k+1) = psi(k) + atan2(y_t, x_t), wrapped to (-pi, pi].
inline double yaw_step(double current_yaw, const Point3& target_F) {
  if (target_F.x() == 0.0 && target_F.y() == 0.0) throw UndefinedBearing("target on the follower axis");
  return wrap_angle(current_yaw + std::atan2(target_F.y(), target_F.x()));
}

/// Next follower reference from the target position in F.
inline Pose pbvs_step(const Pose& follower, const Point3& target_F, const ServoConfig& cfg) {
  Point3 rel = target_F;
  if (cfg.yaw_control) rel.y() = 0.0;  // lateral error is handled by the yaw reference
  Point3 delta_F = rel + cfg.offset;
  for (int i = 0; i < 3; ++i) {
    if (!cfg.active_axes[static_cast<std::size_t>(i)]) delta_F(i) = 0.0;
  }
  Pose ref = follower;
  ref.position = follower.position + yaw_rotation(follower.yaw) * delta_F;
  if (cfg.yaw_control && (target_F.x() != 0.0 || target_F.y() != 0.0)) {
    ref.yaw = yaw_step(follower.yaw, target_F);
  }
  return ref;
}

enum class Mode { Idle, Takeoff, Search, Follow, Intercept };

enum class EventKind {
  MissionStart,
  TakeoffComplete,
  TargetDetected,
  TargetLost,
  EstimateConverged,
  WaypointReached,
};

inline constexpr std::array<Mode, 5> kAllModes{Mode::Idle, Mode::Takeoff, Mode::Search,
                                               Mode::Follow, Mode::Intercept};
inline constexpr std::array<EventKind, 6> kAllEvents{
    EventKind::MissionStart,   EventKind::TakeoffComplete,   EventKind::TargetDetected,
    EventKind::TargetLost,     EventKind::EstimateConverged, EventKind::WaypointReached};

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Idle: return "IDLE";
    case Mode::Takeoff: return "TAKEOFF";
    case Mode::Search: return "SEARCH";
    case Mode::Follow: return "FOLLOW";
    case Mode::Intercept: return "INTERCEPT";
  }
  return "?";
}

inline std::string_view to_string(EventKind e) {
  switch (e) {
    case EventKind::MissionStart: return "mission-start";
    case EventKind::TakeoffComplete: return "takeoff-complete";
    case EventKind::TargetDetected: return "target-detected";
    case EventKind::TargetLost: return "target-lost";
    case EventKind::EstimateConverged: return "estimate-converged";
    case EventKind::WaypointReached: return "waypoint-reached";
  }
  return "?";
}

struct MissionEvent {
  EventKind kind = EventKind::MissionStart;
  double timestamp = 0.0;
};

/// Transition table. Pairs without an edge leave the mode unchanged;
/// INTERCEPT has no outgoing edge.
inline Mode step_mode(Mode mode, const MissionEvent& event) {
  switch (mode) {
    case Mode::Idle:
      return event.kind == EventKind::MissionStart ? Mode::Takeoff : mode;
    case Mode::Takeoff:
      return event.kind == EventKind::TakeoffComplete ? Mode::Search : mode;
    case Mode::Search:
      return event.kind == EventKind::TargetDetected ? Mode::Follow : mode;
    case Mode::Follow:
      if (event.kind == EventKind::TargetLost) return Mode::Search;
      if (event.kind == EventKind::EstimateConverged) return Mode::Intercept;
      return mode;
    case Mode::Intercept:
      return mode;
  }
  return mode;
}

struct ModeTransition {
  double timestamp = 0.0;
  Mode from = Mode::Idle;
  Mode to = Mode::Idle;
  EventKind trigger = EventKind::MissionStart;

  bool operator==(const ModeTransition&) const = default;
};

/// Single-owner state machine that records every transition it takes.
class MissionExecutive {
 public:
  Mode mode() const { return mode_; }
  const std::vector<ModeTransition>& log() const { return log_; }
  std::size_t ignored_events() const { return ignored_; }

  /// Returns true when the event changed the mode.
  bool handle(const MissionEvent& event) {
    if (!log_.empty() && event.timestamp < last_time_) throw InvalidInput("event timestamps must be monotone");
    last_time_ = event.timestamp;
    const Mode next = step_mode(mode_, event);
    if (next == mode_) {
      ++ignored_;
      return false;
    }
    log_.push_back({event.timestamp, mode_, next, event.kind});
    mode_ = next;
    return true;
  }

  /// Replays an event stream from IDLE.
  static std::vector<ModeTransition> replay(std::span<const MissionEvent> events) {
    MissionExecutive exec;
    for (const auto& e : events) exec.handle(e);
    return exec.log();
  }

 private:
  Mode mode_ = Mode::Idle;
  std::vector<ModeTransition> log_;
  std::size_t ignored_ = 0;
  double last_time_ = 0.0;
};

struct ArenaConfig {
  double length = 100.0;  // along global x
  double width = 60.0;    // along global y
  double min_altitude = 2.0;
  double max_altitude = 30.0;

  void validate() const {
    if (!(length > 0.0 && width > 0.0 && min_altitude >= 0.0 && max_altitude > min_altitude)) {
      throw InvalidInput("arena dimensions must be positive");
    }
  }
  bool contains(const Point3& p) const {
    return p.x() >= 0.0 && p.x() <= length && p.y() >= 0.0 && p.y() <= width &&
           p.z() >= min_altitude && p.z() <= max_altitude;
  }
};

/// Lawnmower sweep: legs along x, evenly spaced across y with spacing at most
/// `spacing`, flown back and forth at a fixed altitude.
inline std::vector<Pose> search_waypoints(const ArenaConfig& arena, double spacing, double altitude) {
  if (!(spacing > 0.0)) throw InvalidInput("spacing must be positive");
  arena.validate();
  const double z = std::clamp(altitude, arena.min_altitude, arena.max_altitude);
  const auto legs = static_cast<std::size_t>(std::ceil(arena.width / spacing)) + 1;
  const double step = arena.width / static_cast<double>(legs - 1);
  std::vector<Pose> out;
  out.reserve(2 * legs);
  for (std::size_t i = 0; i < legs; ++i) {
    const double y = std::min(arena.width, step * static_cast<double>(i));
    const bool forward = i % 2 == 0;
    const double x0 = forward ? 0.0 : arena.length;
    const double x1 = forward ? arena.length : 0.0;
    const double yaw = forward ? 0.0 : std::numbers::pi;
    out.emplace_back(Point3(x0, y, z), yaw);
    out.emplace_back(Point3(x1, y, z), yaw);
  }
  return out;
}

}  // namespace intercept
