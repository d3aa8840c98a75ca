#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>

namespace rvm::geom {

// Rigid transform mapping WORLD coordinates into a SENSOR frame:
//   x_sensor = rotation * x_world + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  // Planar sensor pose: sensor located at `position` (world), with its x-axis
  // rotated `yaw` radians CCW from the world x-axis.
  static Pose from_planar(const Eigen::Vector2d& position, double yaw, double height = 0.0) {
    Pose p;
    const double c = std::cos(yaw), s = std::sin(yaw);
    // World->sensor rotation is the transpose of the sensor's orientation.
    p.rotation << c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0;
    p.translation = -p.rotation * Eigen::Vector3d(position.x(), position.y(), height);
    return p;
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& x_world) const {
    return rotation * x_world + translation;
  }

  // Sensor origin expressed in world coordinates.
  Eigen::Vector3d origin_in_world() const { return -(rotation.transpose() * translation); }
};

inline Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(p.rotation.transpose() * p.translation);
  return out;
}

// compose(a, b) applies b first: x -> a(b(x)).
inline Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

inline bool is_valid_rotation(const Eigen::Matrix3d& r, double tol = 1e-9) {
  const bool orthonormal = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol;
  return orthonormal && std::abs(r.determinant() - 1.0) <= tol;
}

// Map a point given in the `src` sensor frame into the `dst` sensor frame.
inline Eigen::Vector3d transform_point(const Pose& src, const Pose& dst, const Eigen::Vector3d& x_src) {
  return compose(dst, inverse(src)).apply(x_src);
}

}  // namespace rvm::geom
