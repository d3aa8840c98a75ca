#pragma once

#include <Eigen/Core>

#include "rvm/geom/pose.hpp"
#include "rvm/geom/range_image.hpp"
#include "rvm/geom/spherical.hpp"
#include "rvm/net/tensor.hpp"

namespace rvm::model {

// Displacement of the sweep-s sensor origin expressed in the current sweep's
// frame: Delta_s = P_0 P_s^-1 [0, 0, 0].
inline Eigen::Vector3d ego_motion_delta(const geom::Pose& current, const geom::Pose& previous) {
  return geom::compose(current, geom::inverse(previous)).apply(Eigen::Vector3d::Zero());
}

// Rotate the planar ego displacement into the frame of a column at azimuth
// `theta`: delta = R_theta^T [Dx, Dy].
inline Eigen::Vector2d rotate_ego_feature(const Eigen::Vector3d& delta, double theta) {
  return geom::rotation2(theta).transpose() * delta.head<2>();
}

// Ego-motion feature raster for one sweep: (delta_x, delta_y, Delta_z) per
// column, broadcast down the rows. With `rotate` off the planar displacement
// is kept in the shared frame (constant across columns).
template <typename Scalar>
net::Tensor<Scalar> make_ego_feature(const Eigen::Vector3d& delta, const geom::RasterConfig& cfg,
                                     bool rotate) {
  net::Tensor<Scalar> out(cfg.height, cfg.width, 3);
  for (int col = 0; col < cfg.width; ++col) {
    const Eigen::Vector2d d =
        rotate ? rotate_ego_feature(delta, cfg.col_to_azimuth(col)) : Eigen::Vector2d(delta.head<2>());
    for (int row = 0; row < cfg.height; ++row) {
      out.at(row, col, 0) = Scalar(d.x());
      out.at(row, col, 1) = Scalar(d.y());
      out.at(row, col, 2) = Scalar(delta.z());
    }
  }
  return out;
}

}  // namespace rvm::model
