#pragma once

// JSON configuration for missions. A resolved config is the compiled defaults
// with user documents merge-patched on top, in order. Keys that do not exist in
// the defaults are rejected. Angles are degrees here, radians everywhere else.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "intercept/errors.hpp"
#include "intercept/sim/mission.hpp"

namespace intercept::config {

using Json = nlohmann::json;

namespace detail {

constexpr double kDeg = std::numbers::pi / 180.0;

/// The target pose as it is written in config files.
struct TargetPoseSpec {
  Point3 center = Point3::Zero();
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;

  RigidTransform transform() const {
    const Eigen::Matrix3d r =
        (Eigen::AngleAxisd(yaw_deg * kDeg, Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(pitch_deg * kDeg, Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(roll_deg * kDeg, Eigen::Vector3d::UnitX()))
            .toRotationMatrix();
    return RigidTransform(r, center);
  }
};

struct Model {
  sim::MissionConfig mission;
  TargetPoseSpec pose{mission.target.pose.translation()};
};

/// Calls f(json_pointer, field) for every configurable field.
template <class F>
void visit(Model& m, F&& f) {
  auto& c = m.mission;
  f("/arena/length", c.arena.length);
  f("/arena/width", c.arena.width);
  f("/arena/min_altitude", c.arena.min_altitude);
  f("/arena/max_altitude", c.arena.max_altitude);

  f("/target/a", c.target.a);
  f("/target/speed", c.target.speed);
  f("/target/start_t", c.target.start_t);
  f("/target/direction", c.target.direction);
  f("/target/center", m.pose.center);
  f("/target/yaw_deg", m.pose.yaw_deg);
  f("/target/pitch_deg", m.pose.pitch_deg);
  f("/target/roll_deg", m.pose.roll_deg);

  auto& s = c.sensor;
  f("/sensor/intrinsics/fx", s.intrinsics.fx);
  f("/sensor/intrinsics/fy", s.intrinsics.fy);
  f("/sensor/intrinsics/cx", s.intrinsics.cx);
  f("/sensor/intrinsics/cy", s.intrinsics.cy);
  f("/sensor/intrinsics/width", s.intrinsics.width);
  f("/sensor/intrinsics/height", s.intrinsics.height);
  f("/sensor/mount_offset", s.mount_offset);
  f("/sensor/range_min", s.range_min);
  f("/sensor/range_max", s.range_max);
  f("/sensor/rate", s.rate);
  f("/sensor/detection_probability", s.detection_probability);
  f("/sensor/roi_bonus", s.roi_bonus);
  f("/sensor/max_detection_range", s.max_detection_range);
  f("/sensor/pixel_sigma", s.pixel_sigma);
  f("/sensor/depth_sigma", s.depth_sigma);
  f("/sensor/outlier_fraction", s.outlier_fraction);
  f("/sensor/false_positive_rate", s.false_positive_rate);
  f("/sensor/target_diagonal", s.target_diagonal);
  f("/sensor/pixels_per_sample", s.pixels_per_sample);
  f("/sensor/min_patch_samples", s.min_patch_samples);
  f("/sensor/max_patch_samples", s.max_patch_samples);

  f("/interceptor/max_speed", c.interceptor.max_speed);
  f("/interceptor/max_yaw_rate", c.interceptor.max_yaw_rate);
  f("/interceptor/control_rate", c.interceptor.control_rate);

  auto& p = c.pipeline;
  f("/pipeline/tracker/kalman/sigma_acc", p.tracker.kalman.sigma_acc);
  f("/pipeline/tracker/kalman/sigma_meas", p.tracker.kalman.sigma_meas);
  f("/pipeline/tracker/kalman/initial_velocity_sigma", p.tracker.kalman.initial_velocity_sigma);
  f("/pipeline/tracker/depth/bins", p.tracker.depth.bins);
  f("/pipeline/tracker/depth/close_area_fraction", p.tracker.depth.close_area_fraction);
  f("/pipeline/tracker/miss_limit", p.tracker.miss_limit);
  f("/pipeline/tracker/confirm_count", p.tracker.confirm_count);
  f("/pipeline/tracker/roi_factor", p.tracker.roi_factor);
  f("/pipeline/tracker/roi_min_side", p.tracker.roi_min_side);
  f("/pipeline/tracker/target_diagonal", p.tracker.target_diagonal);
  f("/pipeline/tracker/gate_chi2", p.tracker.gate_chi2);
  f("/pipeline/tracker/release_fallback_depth", p.tracker.release_fallback_depth);
  f("/pipeline/servo/offset", p.servo.offset);
  f("/pipeline/servo/active_axes", p.servo.active_axes);
  f("/pipeline/servo/yaw_control", p.servo.yaw_control);
  f("/pipeline/direction/min_votes", p.direction.min_votes);
  f("/pipeline/direction/min_area_fraction", p.direction.min_area_fraction);
  f("/pipeline/threshold", p.threshold);
  f("/pipeline/k", p.k);
  f("/pipeline/extreme_fraction", p.extreme_fraction);
  f("/pipeline/extreme_min", p.extreme_min);
  f("/pipeline/min_fit_points", p.min_fit_points);
  f("/pipeline/min_fit_span", p.min_fit_span);
  f("/pipeline/rearm_factor", p.rearm_factor);
  f("/pipeline/takeoff_duration", p.takeoff_duration);
  f("/pipeline/search_altitude", p.search_altitude);
  f("/pipeline/search_spacing", p.search_spacing);
  f("/pipeline/local_search_yaw_rate", p.local_search_yaw_rate);
  f("/pipeline/waypoint_tolerance", p.waypoint_tolerance);
  f("/pipeline/arrival_tolerance", p.arrival_tolerance);
  f("/pipeline/arrival_yaw_tolerance", p.arrival_yaw_tolerance);
  f("/pipeline/intercept_timeout", p.intercept_timeout);
  f("/pipeline/max_loops", p.max_loops);
  f("/pipeline/search_timeout", p.search_timeout);

  f("/scenario/randomize", c.scenario.randomize);
  f("/scenario/max_tilt_deg", c.scenario.max_tilt_deg);
  f("/scenario/center_jitter", c.scenario.center_jitter);
  f("/scenario/altitude_jitter", c.scenario.altitude_jitter);
  f("/scenario/follower_start", c.scenario.follower_start);
}

inline Json to_json_value(double v) { return v; }
inline Json to_json_value(bool v) { return v; }
inline Json to_json_value(int v) { return v; }
inline Json to_json_value(std::size_t v) { return v; }
inline Json to_json_value(Direction d) { return std::string(to_string(d)); }
inline Json to_json_value(const Point3& p) { return Json::array({p.x(), p.y(), p.z()}); }
inline Json to_json_value(const std::array<bool, 3>& a) { return Json::array({a[0], a[1], a[2]}); }

[[noreturn]] inline void type_error(const std::string& key, std::string_view want) {
  throw ConfigError(key + ": expected " + std::string(want));
}

inline void from_json_value(const Json& j, const std::string& key, double& v) {
  if (!j.is_number()) type_error(key, "a number");
  v = j.get<double>();
  if (!std::isfinite(v)) type_error(key, "a finite number");
}
inline void from_json_value(const Json& j, const std::string& key, bool& v) {
  if (!j.is_boolean()) type_error(key, "true or false");
  v = j.get<bool>();
}
inline void from_json_value(const Json& j, const std::string& key, int& v) {
  if (!j.is_number_integer()) type_error(key, "an integer");
  v = j.get<int>();
}
inline void from_json_value(const Json& j, const std::string& key, std::size_t& v) {
  if (!j.is_number_unsigned()) type_error(key, "a non-negative integer");
  v = j.get<std::size_t>();
}
inline void from_json_value(const Json& j, const std::string& key, Direction& v) {
  if (j == "CW") {
    v = Direction::CW;
  } else if (j == "CCW") {
    v = Direction::CCW;
  } else {
    type_error(key, "\"CW\" or \"CCW\"");
  }
}
inline void from_json_value(const Json& j, const std::string& key, Point3& v) {
  if (!j.is_array() || j.size() != 3) type_error(key, "an array of 3 numbers");
  for (int i = 0; i < 3; ++i) from_json_value(j[i], key, v(i));
}
inline void from_json_value(const Json& j, const std::string& key, std::array<bool, 3>& v) {
  if (!j.is_array() || j.size() != 3) type_error(key, "an array of 3 booleans");
  for (std::size_t i = 0; i < 3; ++i) from_json_value(j[i], key, v[i]);
}

inline std::string dotted(std::string_view pointer) {
  std::string out(pointer.substr(1));
  for (auto& ch : out) {
    if (ch == '/') ch = '.';
  }
  return out;
}

inline void reject_unknown(const Json& merged, const Json& defaults, const std::string& prefix) {
  for (const auto& [k, v] : merged.items()) {
    const std::string path = prefix + "/" + k;
    if (!defaults.contains(k)) throw ConfigError("unknown key: " + dotted(path));
    const Json& d = defaults.at(k);
    if (d.is_object()) {
      if (!v.is_object()) throw ConfigError(dotted(path) + ": expected an object");
      reject_unknown(v, d, path);
    }
  }
}

}  // namespace detail

/// The compiled defaults as a config tree.
inline Json defaults() {
  detail::Model m;
  Json j = Json::object();
  detail::visit(m, [&](const char* ptr, const auto& field) {
    j[Json::json_pointer(ptr)] = detail::to_json_value(field);
  });
  return j;
}

/// Builds a validated MissionConfig from a complete tree. Throws ConfigError.
inline sim::MissionConfig from_json(const Json& tree) {
  detail::reject_unknown(tree, defaults(), "");
  detail::Model m;
  detail::visit(m, [&](const char* ptr, auto& field) {
    const Json::json_pointer p(ptr);
    if (!tree.contains(p)) throw ConfigError("missing key: " + detail::dotted(ptr));
    detail::from_json_value(tree.at(p), detail::dotted(ptr), field);
  });
  auto& c = m.mission;
  c.target.pose = m.pose.transform();
  c.pipeline.tracker.depth.range_min = c.sensor.range_min;
  c.pipeline.tracker.depth.range_max = c.sensor.range_max;
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline Json parse_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

/// Applies "a.b.c=value" to a tree. The value is parsed as JSON and falls back
/// to a plain string, so `target.direction=CCW` works unquoted.
inline void apply_override(Json& tree, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value: " + std::string(assignment));
  }
  std::string pointer = "/" + std::string(assignment.substr(0, eq));
  for (auto& ch : pointer) {
    if (ch == '.') ch = '/';
  }
  const std::string raw(assignment.substr(eq + 1));
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  Json patch = Json::object();
  patch[Json::json_pointer(pointer)] = std::move(value);
  tree.merge_patch(patch);
}

/// defaults <- each layer in order.
inline Json resolve(const std::vector<Json>& layers, const std::vector<std::string>& overrides = {}) {
  Json tree = defaults();
  for (const auto& layer : layers) {
    if (!layer.is_object()) throw ConfigError("config documents must be JSON objects");
    tree.merge_patch(layer);
  }
  for (const auto& o : overrides) apply_override(tree, o);
  detail::reject_unknown(tree, defaults(), "");
  return tree;
}

}  // namespace intercept::config
