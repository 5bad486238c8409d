#pragma once

// Frames used throughout:
//   C  camera     x right, y down, z along the optical axis
//   F  follower   x forward, y left, z up (yaw-only body frame)
//   G  global     right-handed, z up, yaw 0 along +x
//   L  lemniscate x along the long axis, z normal to the curve plane

#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "intercept/errors.hpp"

namespace intercept {

using Point3 = Eigen::Vector3d;

inline bool is_finite(const Point3& p) { return p.allFinite(); }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

inline Eigen::Matrix3d yaw_rotation(double yaw) {
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

struct CameraIntrinsics {
  double fx = 700.0;
  double fy = 700.0;
  double cx = 640.0;
  double cy = 360.0;
  double width = 1280.0;
  double height = 720.0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx > 0.0 && cx < width && cy > 0.0 && cy < height;
  }
  void validate() const {
    if (!valid()) throw InvalidInput("camera intrinsics out of range");
  }
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Rotation + translation. The rotation is kept orthonormal: the public
/// constructor runs Gram-Schmidt on the columns, composition re-runs it only
/// when drift is detected.
class RigidTransform {
 public:
  RigidTransform() = default;

  RigidTransform(const Eigen::Matrix3d& rotation, const Point3& translation)
      : rotation_(orthonormalized(rotation)), translation_(translation) {
    if (!translation.allFinite()) throw InvalidInput("non-finite translation");
  }

  static RigidTransform identity() { return {}; }

  static RigidTransform translation_only(const Point3& t) {
    return RigidTransform(Eigen::Matrix3d::Identity(), t);
  }

  static RigidTransform from_yaw(double yaw, const Point3& t = Point3::Zero()) {
    return RigidTransform(yaw_rotation(yaw), t);
  }

  /// Frame whose axes (expressed in the parent frame) are the given columns.
  static RigidTransform from_axes(const Point3& x_axis, const Point3& y_axis,
                                  const Point3& z_axis, const Point3& origin) {
    Eigen::Matrix3d r;
    r.col(0) = x_axis;
    r.col(1) = y_axis;
    r.col(2) = z_axis;
    return RigidTransform(r, origin);
  }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Point3& translation() const { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Point3 operator*(const Point3& p) const { return apply(p); }

  /// (this * other)(p) == this(other(p))
  RigidTransform operator*(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation_ = rotation_ * other.rotation_;
    out.translation_ = rotation_ * other.translation_ + translation_;
    if (orthonormality_error(out.rotation_) > kDriftTolerance) {
      out.rotation_ = orthonormalized(out.rotation_);
    }
    return out;
  }

  RigidTransform inverse() const {
    RigidTransform out;
    out.rotation_ = rotation_.transpose();
    out.translation_ = -(out.rotation_ * translation_);
    return out;
  }

  /// Yaw of the x axis projected on the parent xy-plane.
  double yaw() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

  static double orthonormality_error(const Eigen::Matrix3d& r) {
    return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  }

 private:
  static constexpr double kDriftTolerance = 1e-12;

  static Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& r) {
    if (!r.allFinite()) throw InvalidInput("non-finite rotation");
    Eigen::Vector3d x = r.col(0);
    Eigen::Vector3d y = r.col(1);
    const double nx = x.norm();
    if (nx < 1e-12) throw InvalidInput("rotation has a null column");
    x /= nx;
    y -= x.dot(y) * x;
    const double ny = y.norm();
    if (ny < 1e-12) throw InvalidInput("rotation columns are dependent");
    y /= ny;
    const Eigen::Vector3d z = x.cross(y);
    if (z.dot(r.col(2)) <= 0.0) throw InvalidInput("rotation is not right-handed");
    Eigen::Matrix3d out;
    out.col(0) = x;
    out.col(1) = y;
    out.col(2) = z;
    return out;
  }

  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Point3 translation_ = Point3::Zero();
};

inline Point3 apply(const RigidTransform& t, const Point3& p) { return t.apply(p); }

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

/// Position plus heading. Yaw is always kept in (-pi, pi].
struct Pose {
  Point3 position = Point3::Zero();
  double yaw = 0.0;

  Pose() = default;
  Pose(const Point3& p, double y) : position(p), yaw(wrap_angle(y)) {}

  RigidTransform transform() const { return RigidTransform::from_yaw(yaw, position); }
};

/// Pixel + depth to a point in the camera frame.
inline Point3 backproject(double u, double v, double depth, const CameraIntrinsics& intr) {
  if (!(depth > 0.0) || !std::isfinite(depth)) throw InvalidInput("depth must be positive");
  if (!std::isfinite(u) || !std::isfinite(v)) throw InvalidInput("non-finite pixel");
  return {(u - intr.cx) / intr.fx * depth, (v - intr.cy) / intr.fy * depth, depth};
}

/// Forward pinhole model; nullopt for points on or behind the image plane.
inline std::optional<Pixel> project(const Point3& p_c, const CameraIntrinsics& intr) {
  if (!(p_c.z() > 0.0)) return std::nullopt;
  return Pixel{intr.fx * p_c.x() / p_c.z() + intr.cx, intr.fy * p_c.y() / p_c.z() + intr.cy};
}

inline bool in_image(const Pixel& px, const CameraIntrinsics& intr) {
  return px.u >= 0.0 && px.u <= intr.width && px.v >= 0.0 && px.v <= intr.height;
}

/// p^G = T_G^F * T_F^C * p^C
inline Point3 camera_to_global(const Point3& p_c, const RigidTransform& t_fc,
                               const RigidTransform& t_gf) {
  return t_gf.apply(t_fc.apply(p_c));
}

/// Camera looking along the follower's +x, image x to the follower's right.
inline RigidTransform camera_mount(const Point3& offset = Point3::Zero()) {
  Eigen::Matrix3d r;
  r << 0.0, 0.0, 1.0,
      -1.0, 0.0, 0.0,
       0.0, -1.0, 0.0;
  return RigidTransform(r, offset);
}

}  // namespace intercept
