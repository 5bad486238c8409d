#pragma once

// Synthetic stand-in for the detector + stereo depth: pinhole projection,
// range-dependent detection probability, pixel noise on the box centre and a
// depth patch mixing noisy inliers with uniform outliers.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "intercept/errors.hpp"
#include "intercept/geometry.hpp"
#include "intercept/rng.hpp"
#include "intercept/tracker.hpp"

namespace intercept::sim {

struct SensorConfig {
  CameraIntrinsics intrinsics;
  Point3 mount_offset{0.1, 0.0, -0.05};  // camera origin in F
  double range_min = 2.0;
  double range_max = 15.0;
  double rate = 7.0;  // frames per second
  double detection_probability = 0.9;
  double roi_bonus = 0.05;             // added inside the armed RoI
  double max_detection_range = 25.0;   // probability falls linearly to 0 here past range_max
  double pixel_sigma = 2.0;
  double depth_sigma = 0.3;
  double outlier_fraction = 0.2;
  double false_positive_rate = 0.02;   // per frame
  double target_diagonal = 1.13;
  double pixels_per_sample = 16.0;     // box pixels per depth sample
  std::size_t min_patch_samples = 20;
  std::size_t max_patch_samples = 1000;

  void validate() const {
    intrinsics.validate();
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!(range_min > 0.0 && range_min < range_max)) throw InvalidInput("sensor depth range invalid");
    if (!(rate > 0.0)) throw InvalidInput("sensor rate must be positive");
    if (!prob(detection_probability) || !prob(outlier_fraction) || !prob(false_positive_rate) ||
        !prob(roi_bonus)) {
      throw InvalidInput("sensor probabilities must lie in [0, 1]");
    }
    if (pixel_sigma < 0.0 || depth_sigma < 0.0) throw InvalidInput("noise must be non-negative");
    if (!(target_diagonal > 0.0) || !(pixels_per_sample > 0.0)) throw InvalidInput("invalid target size");
    if (max_detection_range < range_max) throw InvalidInput("max_detection_range below range_max");
    if (min_patch_samples == 0 || max_patch_samples < min_patch_samples) {
      throw InvalidInput("invalid patch sample bounds");
    }
  }

  static SensorConfig noise_free() {
    SensorConfig c;
    c.detection_probability = 1.0;
    c.roi_bonus = 0.0;
    c.pixel_sigma = 0.0;
    c.depth_sigma = 0.0;
    c.outlier_fraction = 0.0;
    c.false_positive_rate = 0.0;
    return c;
  }
};

/// Apparent box side: f_x * diagonal / depth, clamped to [4 px, image].
inline double apparent_side(const SensorConfig& cfg, double depth) {
  return std::clamp(cfg.intrinsics.fx * cfg.target_diagonal / depth, 4.0,
                    std::min(cfg.intrinsics.width, cfg.intrinsics.height));
}

inline double detection_probability(const SensorConfig& cfg, double depth) {
  if (depth <= cfg.range_max) return cfg.detection_probability;
  if (depth >= cfg.max_detection_range) return 0.0;
  return cfg.detection_probability * (cfg.max_detection_range - depth) /
         (cfg.max_detection_range - cfg.range_max);
}

inline DepthPatch make_patch(const SensorConfig& cfg, double depth, double side, Rng& rng) {
  DepthPatch patch;
  patch.range_min = cfg.range_min;
  patch.range_max = cfg.range_max;
  const auto n = std::clamp(static_cast<std::size_t>(std::lround(side * side / cfg.pixels_per_sample)),
                            cfg.min_patch_samples, cfg.max_patch_samples);
  patch.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(cfg.outlier_fraction)) {
      patch.samples.push_back(rng.uniform(cfg.range_min, cfg.range_max));
    } else {
      patch.samples.push_back(depth + cfg.depth_sigma * rng.normal());
    }
  }
  return patch;
}

/// Detection of the true target, if it is in view and the detector fires.
inline std::optional<Detection> sense(const Point3& target_G, const RigidTransform& camera_in_global,
                                      const SensorConfig& cfg, Rng& rng, double timestamp = 0.0,
                                      const std::optional<BBox>& roi_window = std::nullopt) {
  const Point3 p_c = camera_in_global.inverse().apply(target_G);
  const auto px = project(p_c, cfg.intrinsics);
  if (!px || !in_image(*px, cfg.intrinsics)) return std::nullopt;
  const double depth = p_c.z();

  double p = detection_probability(cfg, depth);
  if (roi_window && px->u >= roi_window->u && px->u <= roi_window->u + roi_window->w &&
      px->v >= roi_window->v && px->v <= roi_window->v + roi_window->h) {
    p = std::min(1.0, p + cfg.roi_bonus);
  }
  if (!rng.bernoulli(p)) return std::nullopt;

  const double side = apparent_side(cfg, depth);
  const double cu = px->u + cfg.pixel_sigma * rng.normal();
  const double cv = px->v + cfg.pixel_sigma * rng.normal();
  const bool out_of_range = depth < cfg.range_min || depth > cfg.range_max;
  DepthPatch patch;
  patch.range_min = cfg.range_min;
  patch.range_max = cfg.range_max;
  if (!out_of_range) patch = make_patch(cfg, depth, side, rng);
  return Detection::from_box(BBox::centered(cu, cv, side, side), timestamp, std::move(patch),
                             out_of_range);
}

/// Spurious box somewhere in the image with a pure-noise depth patch.
inline Detection false_positive(const SensorConfig& cfg, Rng& rng, double timestamp) {
  const double side = rng.uniform(16.0, 120.0);
  const double cu = rng.uniform(0.0, cfg.intrinsics.width);
  const double cv = rng.uniform(0.0, cfg.intrinsics.height);
  DepthPatch patch;
  patch.range_min = cfg.range_min;
  patch.range_max = cfg.range_max;
  const auto n = std::clamp(static_cast<std::size_t>(std::lround(side * side / cfg.pixels_per_sample)),
                            cfg.min_patch_samples, cfg.max_patch_samples);
  for (std::size_t i = 0; i < n; ++i) patch.samples.push_back(rng.uniform(cfg.range_min, cfg.range_max));
  return Detection::from_box(BBox::centered(cu, cv, side, side), timestamp, std::move(patch));
}

/// Everything the detector reports for one frame.
inline std::vector<Detection> sense_frame(const Point3& target_G, const RigidTransform& camera_in_global,
                                          const SensorConfig& cfg, Rng& rng, double timestamp,
                                          const std::optional<BBox>& roi_window = std::nullopt) {
  std::vector<Detection> out;
  if (auto d = sense(target_G, camera_in_global, cfg, rng, timestamp, roi_window)) {
    out.push_back(std::move(*d));
  }
  if (rng.bernoulli(cfg.false_positive_rate)) out.push_back(false_positive(cfg, rng, timestamp));
  return out;
}

}  // namespace intercept::sim
