#pragma once

// Shared generators for the test suites.

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "intercept/geometry.hpp"
#include "intercept/rng.hpp"

namespace intercept::testing {

inline Point3 random_point(Rng& rng, double scale = 10.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

/// Uniformly distributed rotation (random unit quaternion).
inline Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

inline RigidTransform random_transform(Rng& rng, double scale = 50.0) {
  return RigidTransform(random_rotation(rng), random_point(rng, scale));
}

inline double max_abs_diff(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace intercept::testing
