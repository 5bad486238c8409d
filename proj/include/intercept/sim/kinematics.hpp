#pragma once

#include <cmath>

#include "intercept/errors.hpp"
#include "intercept/geometry.hpp"

namespace intercept::sim {

struct InterceptorConfig {
  double max_speed = 4.5;     // m/s
  double max_yaw_rate = 1.0;  // rad/s
  double control_rate = 50.0; // Hz

  void validate() const {
    if (!(max_speed > 0.0 && max_yaw_rate > 0.0 && control_rate > 0.0)) {
      throw InvalidInput("interceptor limits must be positive");
    }
  }
};

/// Kinematic follower: straight-line motion toward the reference at no more
/// than max_speed, yaw slewed at no more than max_yaw_rate.
inline Pose step_interceptor(const Pose& state, const Pose& reference, const InterceptorConfig& cfg,
                             double dt) {
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  Pose out = state;
  const Point3 delta = reference.position - state.position;
  const double dist = delta.norm();
  const double reach = cfg.max_speed * dt;
  out.position = dist <= reach ? reference.position : Point3(state.position + delta * (reach / dist));

  const double dyaw = wrap_angle(reference.yaw - state.yaw);
  const double turn = cfg.max_yaw_rate * dt;
  out.yaw = std::abs(dyaw) <= turn ? reference.yaw : wrap_angle(state.yaw + std::copysign(turn, dyaw));
  return out;
}

}  // namespace intercept::sim
