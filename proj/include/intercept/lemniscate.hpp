#pragma once

// Bernoulli lemniscate estimation from 3D observations.
//
// Curve in its own frame L:
//   x = a*sqrt(2)*cos(t) / (sin(t)^2 + 1) + shift_x
//   y = a*sqrt(2)*cos(t)*sin(t) / (sin(t)^2 + 1)
//   z = 0
// The frame comes from PCA of the observations (centroid origin, x along the
// dominant axis, z along the weakest axis pointing up); the size from the
// robust extent of the signed radii along x.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "intercept/errors.hpp"
#include "intercept/geometry.hpp"
#include "intercept/tracker.hpp"

namespace intercept {

/// Time-ordered observations in G.
class ObservationSet {
 public:
  ObservationSet() = default;
  explicit ObservationSet(std::vector<TimedPoint> pts) {
    for (const auto& p : pts) add(p.t, p.p);
  }

  void add(double t, const Point3& p) {
    if (!points_.empty() && !(t > points_.back().t)) {
      throw InvalidInput("observation timestamps must be strictly increasing");
    }
    if (!is_finite(p) || !std::isfinite(t)) throw InvalidInput("non-finite observation");
    points_.push_back({t, p});
    positions_.push_back(p);
  }

  void clear() {
    points_.clear();
    positions_.clear();
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<TimedPoint>& points() const { return points_; }
  std::span<const Point3> positions() const { return positions_; }
  double time_span() const { return empty() ? 0.0 : points_.back().t - points_.front().t; }

 private:
  std::vector<TimedPoint> points_;
  std::vector<Point3> positions_;
};

struct LemniscateEstimate {
  double a = 0.0;
  RigidTransform pose;  // T_G^L
  double shift_x = 0.0;
  std::size_t k = 0;
  std::vector<Point3> samples_G;
};

inline Point3 lemniscate_point(double a, double shift_x, double t) {
  const double s = std::sin(t);
  const double c = std::cos(t);
  const double den = s * s + 1.0;
  const double scale = a * std::numbers::sqrt2;
  return {scale * c / den + shift_x, scale * c * s / den, 0.0};
}

inline std::vector<Point3> sample_lemniscate(double a, double shift_x, std::size_t k) {
  if (!(a > 0.0)) throw InvalidInput("focal distance must be positive");
  if (k < 4) throw InvalidInput("need at least 4 samples");
  std::vector<Point3> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    out.push_back(lemniscate_point(a, shift_x, t));
  }
  return out;
}

/// Residual of (x^2+y^2)^2 - 2a^2(x^2-y^2) for a point already un-shifted.
inline double lemniscate_residual(double a, double x, double y) {
  const double r2 = x * x + y * y;
  return r2 * r2 - 2.0 * a * a * (x * x - y * y);
}

/// Weighted centroid + principal axes. x is oriented so the most recent observation
/// has non-negative x in L (ties: x toward global +x), z points up.
/// Empty weights mean uniform.
inline RigidTransform fit_pose(std::span<const Point3> points, std::span<const double> weights) {
  if (points.size() < 4) throw DegenerateGeometry("need at least 4 points for a pose fit");
  if (!weights.empty() && weights.size() != points.size()) {
    throw InvalidInput("weights must match points");
  }
  const auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double total = 0.0;
  Point3 centroid = Point3::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    centroid += w(i) * points[i];
    total += w(i);
  }
  if (!(total > 0.0)) throw InvalidInput("weights must have a positive sum");
  centroid /= total;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point3 d = points[i] - centroid;
    cov += w(i) * d * d.transpose();
  }
  cov /= total;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  if (eig.info() != Eigen::Success) throw DegenerateGeometry("PCA failed");
  const Eigen::Vector3d& values = eig.eigenvalues();  // ascending
  if (!(values(2) > 0.0) || values(1) <= values(2) * 1e-12) {
    throw DegenerateGeometry("observations are collinear or coincident");
  }

  Point3 x_axis = eig.eigenvectors().col(2);
  Point3 z_axis = eig.eigenvectors().col(0);

  if (z_axis.z() < 0.0 ||
      (z_axis.z() == 0.0 && (z_axis.y() < 0.0 || (z_axis.y() == 0.0 && z_axis.x() < 0.0)))) {
    z_axis = -z_axis;
  }
  const double recent = (points.back() - centroid).dot(x_axis);
  if (recent < 0.0 || (recent == 0.0 && x_axis.x() < 0.0)) x_axis = -x_axis;

  const Point3 y_axis = z_axis.cross(x_axis);
  return RigidTransform::from_axes(x_axis, y_axis, z_axis, centroid);
}

inline RigidTransform fit_pose(std::span<const Point3> points) { return fit_pose(points, {}); }

inline RigidTransform fit_pose(const ObservationSet& obs) { return fit_pose(obs.positions()); }

/// Distance from the origin of L, signed by the x component (x == 0 counts as +).
inline std::vector<double> signed_radii(std::span<const Point3> points_L) {
  std::vector<double> r;
  r.reserve(points_L.size());
  for (const auto& p : points_L) r.push_back(p.x() < 0.0 ? -p.norm() : p.norm());
  return r;
}

struct Extremes {
  double max = 0.0;
  double min = 0.0;
};

namespace detail {
inline double median_sorted(std::span<const double> v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

/// Median of the m largest and of the m smallest values.
inline Extremes robust_extremes(std::span<const double> r, std::size_t m) {
  if (m < 1 || r.size() < m) throw InvalidInput("robust_extremes needs size >= m >= 1");
  std::vector<double> v(r.begin(), r.end());
  std::sort(v.begin(), v.end());
  const std::span<const double> all(v);
  return {detail::median_sorted(all.last(m)), detail::median_sorted(all.first(m))};
}

/// Window for robust_extremes: max(min_window, ceil(fraction * n)), capped at n.
inline std::size_t extreme_window(std::size_t n, double fraction = 0.05, std::size_t min_window = 3) {
  const auto scaled = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  return std::min(n, std::max(min_window, scaled));
}

inline LemniscateEstimate estimate(std::span<const Point3> points_G, std::size_t k,
                                   std::size_t m) {
  LemniscateEstimate est;
  est.pose = fit_pose(points_G);
  const RigidTransform to_local = est.pose.inverse();

  std::vector<Point3> local;
  local.reserve(points_G.size());
  for (const auto& p : points_G) local.push_back(to_local.apply(p));

  const auto radii = signed_radii(local);
  const Extremes ext = robust_extremes(radii, std::min(m, radii.size()));
  const double length = ext.max - ext.min;
  if (!(length > 0.0)) throw DegenerateGeometry("observations have no extent along x");

  est.a = length / (2.0 * std::numbers::sqrt2);
  est.shift_x = 0.5 * (ext.max + ext.min);
  est.k = k;
  est.samples_G = sample_lemniscate(est.a, est.shift_x, k);
  for (auto& p : est.samples_G) p = est.pose.apply(p);
  return est;
}

inline LemniscateEstimate estimate(const ObservationSet& obs, std::size_t k = 100,
                                   std::optional<std::size_t> m = std::nullopt) {
  return estimate(obs.positions(), k, m.value_or(extreme_window(obs.size())));
}

}  // namespace intercept
