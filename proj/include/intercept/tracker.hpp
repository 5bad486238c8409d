#pragma once

// Single-target tracking in the global frame: constant-velocity Kalman filter,
// IoU association against the filter's predicted box, and the region-of-
// interest window that is armed after a run of consecutive detections.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "intercept/depth_filter.hpp"
#include "intercept/errors.hpp"
#include "intercept/geometry.hpp"

namespace intercept {

struct BBox {
  double u = 0.0;  // top-left corner
  double v = 0.0;
  double w = 1.0;
  double h = 1.0;

  bool valid() const { return w > 0.0 && h > 0.0; }
  double area() const { return w * h; }
  double center_u() const { return u + 0.5 * w; }
  double center_v() const { return v + 0.5 * h; }

  static BBox centered(double cu, double cv, double w, double h) {
    return {cu - 0.5 * w, cv - 0.5 * h, w, h};
  }
};

inline double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.u + a.w, b.u + b.w) - std::max(a.u, b.u);
  const double ih = std::min(a.v + a.h, b.v + b.h) - std::max(a.v, b.v);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

struct Detection {
  BBox bbox;
  double center_u = 0.0;
  double center_v = 0.0;
  double timestamp = 0.0;
  DepthPatch patch;
  // Set by the sensor when the object lies outside the measurable depth range.
  bool depth_out_of_range = false;

  static Detection from_box(const BBox& box, double t, DepthPatch patch, bool out_of_range = false) {
    return {box, box.center_u(), box.center_v(), t, std::move(patch), out_of_range};
  }
};

/// Highest-IoU detection; none when nothing overlaps the prediction.
inline std::optional<Detection> associate(std::span<const Detection> detections,
                                          const BBox& predicted_bbox) {
  const Detection* best = nullptr;
  double best_iou = 0.0;
  for (const auto& d : detections) {
    const double score = iou(d.bbox, predicted_bbox);
    if (score > best_iou) {
      best_iou = score;
      best = &d;
    }
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

/// Expands `prev` about its centre, grows it to at least min_side per side,
/// then shifts it (never shrinking below the image size) to fit the image.
inline BBox roi(const BBox& prev, double factor, double min_side, double image_width,
                double image_height) {
  if (factor < 1.0) throw InvalidInput("roi factor must be >= 1");
  double w = std::min(std::max(prev.w * factor, min_side), image_width);
  double h = std::min(std::max(prev.h * factor, min_side), image_height);
  double u = prev.center_u() - 0.5 * w;
  double v = prev.center_v() - 0.5 * h;
  u = std::clamp(u, 0.0, image_width - w);
  v = std::clamp(v, 0.0, image_height - h);
  return {u, v, w, h};
}

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

struct KalmanNoise {
  double sigma_acc = 3.0;   // white-noise acceleration, m/s^2
  double sigma_meas = 0.3;  // per-axis position measurement noise, m
  double initial_velocity_sigma = 5.0;
};

struct TrackState {
  Vector6 state = Vector6::Zero();  // [x y z vx vy vz] in G
  Matrix6 covariance = Matrix6::Identity();
  double last_update = 0.0;  // time the state refers to
  int consecutive_misses = 0;

  Point3 position() const { return state.head<3>(); }
  Eigen::Vector3d velocity() const { return state.tail<3>(); }
};

inline TrackState init_track(const Point3& z, double t, const KalmanNoise& noise) {
  TrackState s;
  s.state.head<3>() = z;
  s.covariance.setZero();
  s.covariance.topLeftCorner<3, 3>().diagonal().setConstant(noise.sigma_meas * noise.sigma_meas);
  s.covariance.bottomRightCorner<3, 3>().diagonal().setConstant(
      noise.initial_velocity_sigma * noise.initial_velocity_sigma);
  s.last_update = t;
  return s;
}

inline Matrix6 cv_transition(double dt) {
  Matrix6 f = Matrix6::Identity();
  f.topRightCorner<3, 3>().diagonal().setConstant(dt);
  return f;
}

inline Matrix6 cv_process_noise(double dt, double sigma_acc) {
  const double q = sigma_acc * sigma_acc;
  Matrix6 m = Matrix6::Zero();
  m.topLeftCorner<3, 3>().diagonal().setConstant(q * dt * dt * dt / 3.0);
  m.topRightCorner<3, 3>().diagonal().setConstant(q * dt * dt / 2.0);
  m.bottomLeftCorner<3, 3>().diagonal().setConstant(q * dt * dt / 2.0);
  m.bottomRightCorner<3, 3>().diagonal().setConstant(q * dt);
  return m;
}

inline TrackState predict(const TrackState& track, double dt, const KalmanNoise& noise = {}) {
  if (!(dt > 0.0)) throw InvalidInput("predict needs dt > 0");
  const Matrix6 f = cv_transition(dt);
  TrackState out = track;
  out.state = f * track.state;
  out.covariance = f * track.covariance * f.transpose() + cv_process_noise(dt, noise.sigma_acc);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.last_update = track.last_update + dt;
  return out;
}

/// Joseph-form position update.
inline TrackState update(const TrackState& track, const Point3& z, const Eigen::Matrix3d& r) {
  if (!is_finite(z)) throw InvalidInput("non-finite measurement");
  Eigen::Matrix<double, 3, 6> hm = Eigen::Matrix<double, 3, 6>::Zero();
  hm.leftCols<3>().setIdentity();
  const Eigen::Matrix3d s = hm * track.covariance * hm.transpose() + r;
  const Eigen::Matrix<double, 6, 3> k = track.covariance * hm.transpose() * s.inverse();
  const Matrix6 i_kh = Matrix6::Identity() - k * hm;
  TrackState out = track;
  out.state = track.state + k * (z - hm * track.state);
  out.covariance = i_kh * track.covariance * i_kh.transpose() + k * r * k.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.consecutive_misses = 0;
  return out;
}

/// Normalized innovation squared of z against the predicted position; chi-square
/// with 3 dof when the filter is consistent.
inline double innovation_nis(const TrackState& track, const Point3& z,
                             const Eigen::Matrix3d& r) {
  const Eigen::Vector3d y = z - track.position();
  const Eigen::Matrix3d s = track.covariance.topLeftCorner<3, 3>() + r;
  return y.dot(s.ldlt().solve(y));
}

inline TrackState update(const TrackState& track, const Point3& z, const KalmanNoise& noise = {}) {
  return update(track, z,
                Eigen::Matrix3d::Identity() * (noise.sigma_meas * noise.sigma_meas));
}

struct TrackerConfig {
  KalmanNoise kalman;
  DepthFilterConfig depth;
  int miss_limit = 14;     // consecutive empty frames before the track is dropped
  int confirm_count = 3;   // consecutive detections that arm the RoI
  double roi_factor = 2.0;
  double roi_min_side = 608.0;
  double target_diagonal = 1.13;  // physical size used for predicted boxes, m
  // Innovation gate on the NIS (3 dof, 99.9%). A confirmed track treats a gated
  // measurement as a miss; a tentative one restarts from it. <= 0 disables.
  double gate_chi2 = 16.27;
  // Measurements whose depth came from the out-of-range fallback are clamped
  // to a range limit; they steer the filter but are not released downstream
  // unless this is set.
  bool release_fallback_depth = false;
};

/// Camera placement for one frame.
struct SensorGeometry {
  CameraIntrinsics intrinsics;
  RigidTransform camera_in_follower;  // T_F^C
  RigidTransform follower_in_global;  // T_G^F

  RigidTransform camera_in_global() const { return follower_in_global * camera_in_follower; }
};

struct TimedPoint {
  double t = 0.0;
  Point3 p = Point3::Zero();
};

struct TrackStepResult {
  std::optional<Point3> measurement;  // associated measurement in G, if any
  std::vector<TimedPoint> confirmed;  // measurements released to downstream consumers
  bool lost = false;             // a confirmed track was dropped this frame
  bool started = false;          // a tentative track was initiated this frame
  bool newly_confirmed = false;  // the track was confirmed this frame
};

/// Per-frame orchestration: associate, depth, back-project, update.
/// Measurements of a fresh track are held back until it is confirmed so that a
/// lone false positive never reaches the trajectory estimator.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {}) : cfg_(cfg) {}

  const TrackerConfig& config() const { return cfg_; }
  const std::optional<TrackState>& track() const { return track_; }
  bool confirmed() const { return confirmed_; }
  bool roi_active() const { return confirmed_; }

  /// Advances the filter to `now` (no-op if already there).
  void predict_to(double now) {
    if (!track_) return;
    const double dt = now - track_->last_update;
    if (dt > 0.0) track_ = predict(*track_, dt, cfg_.kalman);
  }

  std::optional<Point3> estimate() const {
    if (!track_) return std::nullopt;
    return track_->position();
  }

  std::optional<BBox> predicted_bbox(const SensorGeometry& geo) const {
    if (!track_) return std::nullopt;
    const Point3 p_c = geo.camera_in_global().inverse().apply(track_->position());
    const auto px = project(p_c, geo.intrinsics);
    if (!px) return std::nullopt;
    const double spread = std::sqrt(track_->covariance.topLeftCorner<3, 3>().trace() / 3.0);
    const double side = std::clamp(
        geo.intrinsics.fx * (cfg_.target_diagonal + 2.0 * spread) / p_c.z(), 4.0,
        std::min(geo.intrinsics.width, geo.intrinsics.height));
    return BBox::centered(px->u, px->v, side, side);
  }

  /// Window for the next frame, while armed.
  std::optional<BBox> roi_window(const SensorGeometry& geo) const {
    if (!confirmed_) return std::nullopt;
    std::optional<BBox> base = last_box_;
    if (!base) base = predicted_bbox(geo);
    if (!base) return std::nullopt;
    return roi(*base, cfg_.roi_factor, cfg_.roi_min_side, geo.intrinsics.width,
               geo.intrinsics.height);
  }

  TrackStepResult step(std::span<const Detection> detections, double now,
                       const SensorGeometry& geo) {
    TrackStepResult out;
    predict_to(now);

    std::optional<Detection> chosen;
    if (track_) {
      if (auto pred = predicted_bbox(geo)) chosen = associate(detections, *pred);
    } else if (!detections.empty()) {
      // No prior: start from the largest (closest) box.
      chosen = *std::max_element(detections.begin(), detections.end(),
                                 [](const Detection& a, const Detection& b) {
                                   return a.bbox.area() < b.bbox.area();
                                 });
    }

    std::optional<Point3> z;
    bool fallback = false;
    if (chosen) {
      z = measure(*chosen, geo);
      fallback = chosen->depth_out_of_range;
    }
    const bool releasable = !fallback || cfg_.release_fallback_depth;

    if (!z) {
      last_box_.reset();
      if (track_) {
        if (!confirmed_) {
          // Tentative tracks do not survive a gap.
          reset();
          return out;
        }
        ++track_->consecutive_misses;
        consecutive_hits_ = 0;
        if (track_->consecutive_misses >= cfg_.miss_limit) {
          reset();
          out.lost = true;
        }
      }
      return out;
    }

    if (track_ && cfg_.gate_chi2 > 0.0) {
      const double var = cfg_.kalman.sigma_meas * cfg_.kalman.sigma_meas;
      if (innovation_nis(*track_, *z, Eigen::Matrix3d::Identity() * var) > cfg_.gate_chi2) {
        if (confirmed_) {
          last_box_.reset();
          ++track_->consecutive_misses;
          if (track_->consecutive_misses >= cfg_.miss_limit) {
            reset();
            out.lost = true;
          }
          return out;
        }
        reset();
      }
    }

    out.measurement = z;
    last_box_ = chosen->bbox;
    if (!track_) {
      track_ = init_track(*z, now, cfg_.kalman);
      out.started = true;
    } else {
      track_ = update(*track_, *z, cfg_.kalman);
    }
    ++consecutive_hits_;

    if (confirmed_) {
      if (releasable) out.confirmed.push_back({now, *z});
    } else {
      if (releasable) pending_.push_back({now, *z});
      if (consecutive_hits_ >= cfg_.confirm_count) {
        confirmed_ = true;
        out.newly_confirmed = true;
        out.confirmed = std::move(pending_);
        pending_.clear();
      }
    }
    return out;
  }

  void reset() {
    track_.reset();
    last_box_.reset();
    pending_.clear();
    confirmed_ = false;
    consecutive_hits_ = 0;
  }

  /// Depth + back-projection of a detection into G; nullopt when the depth
  /// filter has nothing usable.
  std::optional<Point3> measure(const Detection& det, const SensorGeometry& geo) const {
    double depth = 0.0;
    if (det.depth_out_of_range) {
      const double frac = det.bbox.area() / (geo.intrinsics.width * geo.intrinsics.height);
      depth = out_of_range_depth(frac, cfg_.depth.close_area_fraction, cfg_.depth.range_min,
                                 cfg_.depth.range_max);
    } else {
      try {
        DepthPatch patch = det.patch;
        patch.range_min = cfg_.depth.range_min;
        patch.range_max = cfg_.depth.range_max;
        depth = estimate_depth(patch, cfg_.depth);
      } catch (const NoData&) {
        return std::nullopt;
      }
    }
    const Point3 p_c = backproject(det.center_u, det.center_v, depth, geo.intrinsics);
    return camera_to_global(p_c, geo.camera_in_follower, geo.follower_in_global);
  }

 private:
  TrackerConfig cfg_;
  std::optional<TrackState> track_;
  std::optional<BBox> last_box_;
  std::vector<TimedPoint> pending_;
  bool confirmed_ = false;
  int consecutive_hits_ = 0;
};

}  // namespace intercept
