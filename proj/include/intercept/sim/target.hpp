#pragma once

// Target flying a Bernoulli lemniscate at constant ground speed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "intercept/errors.hpp"
#include "intercept/geometry.hpp"
#include "intercept/interception.hpp"
#include "intercept/lemniscate.hpp"

namespace intercept::sim {

/// Cumulative chord length of the unit (a = 1) lemniscate over one period,
/// tabulated at 10^4 evenly spaced parameter values. Lengths scale with a.
class ArcLengthTable {
 public:
  static constexpr std::size_t kSamples = 10000;

  static const ArcLengthTable& unit() {
    static const ArcLengthTable table;
    return table;
  }

  double perimeter() const { return cumulative_.back(); }

  /// Arc length from t = 0 to t (t taken modulo 2 pi).
  double length_at(double t) const {
    const double tt = wrap_param(t);
    const double pos = tt / step_;
    auto i = static_cast<std::size_t>(pos);
    if (i >= kSamples) i = kSamples - 1;
    const double frac = pos - static_cast<double>(i);
    return cumulative_[i] + frac * (cumulative_[i + 1] - cumulative_[i]);
  }

  /// Inverse of length_at for s taken modulo the perimeter.
  double param_at(double s) const {
    double ss = std::fmod(s, perimeter());
    if (ss < 0.0) ss += perimeter();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), ss);
    auto i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
    i = std::clamp<std::size_t>(i, 1, kSamples) - 1;
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double frac = seg > 0.0 ? (ss - cumulative_[i]) / seg : 0.0;
    return (static_cast<double>(i) + frac) * step_;
  }

 private:
  ArcLengthTable() : step_(2.0 * std::numbers::pi / static_cast<double>(kSamples)) {
    cumulative_.resize(kSamples + 1);
    cumulative_[0] = 0.0;
    Point3 prev = lemniscate_point(1.0, 0.0, 0.0);
    for (std::size_t i = 1; i <= kSamples; ++i) {
      const Point3 p = lemniscate_point(1.0, 0.0, step_ * static_cast<double>(i));
      cumulative_[i] = cumulative_[i - 1] + (p - prev).norm();
      prev = p;
    }
  }

  static double wrap_param(double t) {
    double tt = std::fmod(t, 2.0 * std::numbers::pi);
    if (tt < 0.0) tt += 2.0 * std::numbers::pi;
    return tt;
  }

  double step_;
  std::vector<double> cumulative_;
};

struct TargetConfig {
  double a = 20.0;
  RigidTransform pose = RigidTransform::translation_only({50.0, 30.0, 12.0});  // T_G^L of the true path
  double speed = 5.0;
  double start_t = 0.0;
  Direction direction = Direction::CW;  // CW: curve parameter increases over time

  void validate() const {
    if (!(a > 0.0)) throw InvalidInput("target focal distance must be positive");
    if (!(speed > 0.0)) throw InvalidInput("target speed must be positive");
    if (!std::isfinite(start_t)) throw InvalidInput("target start parameter must be finite");
  }
};

class TargetPath {
 public:
  explicit TargetPath(TargetConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    start_length_ = table().length_at(cfg_.start_t) * cfg_.a;
  }

  const TargetConfig& config() const { return cfg_; }

  double perimeter() const { return table().perimeter() * cfg_.a; }
  double period() const { return perimeter() / cfg_.speed; }

  double param_at(double time) const {
    const double sign = cfg_.direction == Direction::CW ? 1.0 : -1.0;
    return table().param_at((start_length_ + sign * cfg_.speed * time) / cfg_.a);
  }

  Point3 local_position(double time) const { return lemniscate_point(cfg_.a, 0.0, param_at(time)); }
  Point3 position(double time) const { return cfg_.pose.apply(local_position(time)); }

  /// Dense polyline of the true path in G.
  std::vector<Point3> polyline(std::size_t n = 10000) const {
    std::vector<Point3> out;
    out.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      out.push_back(cfg_.pose.apply(lemniscate_point(cfg_.a, 0.0, t)));
    }
    return out;
  }

  /// Euclidean distance from p to the closest point of the true path.
  double distance_to_path(const Point3& p) const {
    const auto line = polyline();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const Point3 seg = line[i + 1] - line[i];
      const double len2 = seg.squaredNorm();
      double s = len2 > 0.0 ? (p - line[i]).dot(seg) / len2 : 0.0;
      s = std::clamp(s, 0.0, 1.0);
      best = std::min(best, (line[i] + s * seg - p).squaredNorm());
    }
    return std::sqrt(best);
  }

 private:
  static const ArcLengthTable& table() { return ArcLengthTable::unit(); }

  TargetConfig cfg_;
  double start_length_ = 0.0;
};

inline Point3 target_position(const TargetConfig& cfg, double t) {
  if (t < 0.0) throw InvalidInput("time must be non-negative");
  return TargetPath(cfg).position(t);
}

}  // namespace intercept::sim
