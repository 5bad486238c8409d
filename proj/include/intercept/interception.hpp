#pragma once

// Validation of a lemniscate estimate (bidirectional Hausdorff distance over
// the focal distance) and the interception pose at the end of the
// near-straight segment, facing the incoming target.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "intercept/errors.hpp"
#include "intercept/geometry.hpp"
#include "intercept/lemniscate.hpp"

namespace intercept {

/// sup_{x in X} inf_{y in Y} |x - y|, exact O(|X||Y|) scan.
inline double hausdorff_directed(std::span<const Point3> from, std::span<const Point3> to) {
  if (from.empty() || to.empty()) throw InvalidInput("hausdorff needs non-empty sets");
  double worst = 0.0;
  for (const auto& x : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : to) {
      best = std::min(best, (x - y).squaredNorm());
      if (best <= worst) break;  // cannot raise the running max
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

inline double hausdorff_bidirectional(std::span<const Point3> x, std::span<const Point3> y) {
  return std::max(hausdorff_directed(x, y), hausdorff_directed(y, x));
}

struct HistoryEntry {
  std::size_t point_count = 0;
  double d_h = 0.0;
};

struct ConvergenceReport {
  double d_h = 0.0;
  double a = 0.0;
  double ratio = 0.0;
  bool converged = false;
  std::vector<HistoryEntry> history;
};

inline ConvergenceReport check_convergence(std::span<const Point3> measurements_G,
                                           const LemniscateEstimate& est, double threshold) {
  if (measurements_G.empty()) throw InvalidInput("no measurements");
  ConvergenceReport rep;
  rep.d_h = hausdorff_bidirectional(measurements_G, est.samples_G);
  rep.a = est.a;
  rep.ratio = rep.d_h / est.a;
  rep.converged = rep.ratio < threshold;
  rep.history.push_back({measurements_G.size(), rep.d_h});
  return rep;
}

// Traversal direction in L. CW: the parameter t of the curve equations
// increases along the motion, i.e. the -x lobe is flown clockwise and the
// +x lobe counter-clockwise when viewed from +z of L.
enum class Direction { CW, CCW };

inline std::string_view to_string(Direction d) { return d == Direction::CW ? "CW" : "CCW"; }

struct DirectionVoteConfig {
  std::size_t min_votes = 5;
  double min_area_fraction = 0.05;  // |swept area| must exceed this * a^2
};

/// Signed-area vote about the lobe's focus. Input points are in L, all on one
/// lobe, in time order.
inline Direction identify_direction(std::span<const Point3> recent_points_L, double a,
                                    double shift_x, const DirectionVoteConfig& cfg = {}) {
  if (recent_points_L.size() < 3) throw UndecidedDirection("need at least 3 points");
  double mean_x = 0.0;
  for (const auto& p : recent_points_L) mean_x += p.x() - shift_x;
  const double lobe = mean_x >= 0.0 ? 1.0 : -1.0;
  const Eigen::Vector2d focus(lobe * a + shift_x, 0.0);

  double swept = 0.0;
  std::size_t votes = 0;
  for (std::size_t i = 0; i + 1 < recent_points_L.size(); ++i) {
    const Eigen::Vector2d u = recent_points_L[i].head<2>() - focus;
    const Eigen::Vector2d v = recent_points_L[i + 1].head<2>() - focus;
    const double cross = u.x() * v.y() - u.y() * v.x();
    if (cross != 0.0) ++votes;
    swept += 0.5 * cross;
  }
  if (votes < cfg.min_votes || std::abs(swept) <= cfg.min_area_fraction * a * a) {
    throw UndecidedDirection("swept area too small to decide direction");
  }
  // Counter-clockwise sweep on the -x lobe (or clockwise on +x) means t decreases.
  const bool ccw_sweep = swept > 0.0;
  const bool t_increasing = (lobe > 0.0) == ccw_sweep;
  return t_increasing ? Direction::CW : Direction::CCW;
}

/// Trailing run of points lying on the same side of the (shifted) centre.
inline std::vector<Point3> recent_lobe_run(std::span<const Point3> points_L, double shift_x) {
  std::vector<Point3> run;
  if (points_L.empty()) return run;
  const bool positive = points_L.back().x() - shift_x >= 0.0;
  std::size_t first = points_L.size();
  while (first > 0 && ((points_L[first - 1].x() - shift_x >= 0.0) == positive)) --first;
  run.assign(points_L.begin() + static_cast<std::ptrdiff_t>(first), points_L.end());
  return run;
}

struct InterceptPose {
  Point3 position_G = Point3::Zero();
  double yaw_G = 0.0;
  Direction direction = Direction::CW;
  double t_i = 0.0;  // curve parameter of the interception point
  double t_t = 0.0;  // curve parameter the interceptor looks toward

  Pose pose() const { return Pose(position_G, yaw_G); }
};

inline InterceptPose intercept_pose(const LemniscateEstimate& est, Direction direction) {
  InterceptPose out;
  out.direction = direction;
  if (direction == Direction::CW) {
    out.t_i = 0.75 * std::numbers::pi;
    out.t_t = 0.25 * std::numbers::pi;
  } else {
    out.t_i = 0.25 * std::numbers::pi;
    out.t_t = 0.75 * std::numbers::pi;
  }
  const Point3 p_i = lemniscate_point(est.a, est.shift_x, out.t_i);
  const Point3 p_t = lemniscate_point(est.a, est.shift_x, out.t_t);
  const double yaw_L = std::atan2(p_t.y() - p_i.y(), p_t.x() - p_i.x());

  out.position_G = est.pose.apply(p_i);
  // Heading in G of the L-frame direction, projected on the horizontal plane.
  const Point3 heading_G = est.pose.rotation() * Point3(std::cos(yaw_L), std::sin(yaw_L), 0.0);
  out.yaw_G = wrap_angle(std::atan2(heading_G.y(), heading_G.x()));
  return out;
}

}  // namespace intercept
