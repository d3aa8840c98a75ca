#pragma once

#include <limits>
#include <vector>

#include "rvm/geom/warp.hpp"
#include "rvm/sim/scene.hpp"

namespace rvm::sim {

// Slab test of a ray against an actor's oriented 3D box. Returns the entry
// distance along the (unit) ray, or +inf when the ray misses.
inline double ray_box_distance(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                               const Actor& box) {
  const double c = std::cos(box.heading), s = std::sin(box.heading);
  const Eigen::Vector3d box_center(box.center.x(), box.center.y(), box.z_offset + 0.5 * box.height);
  // Rotate into the box frame (yaw only).
  const Eigen::Vector3d rel = origin - box_center;
  const Eigen::Vector3d o(c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y(), rel.z());
  const Eigen::Vector3d d(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());
  const double half[3] = {0.5 * box.length, 0.5 * box.width, 0.5 * box.height};

  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(d[axis]) < 1e-12) {
      if (std::abs(o[axis]) > half[axis]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t0 = (-half[axis] - o[axis]) / d[axis];
    double t1 = (half[axis] - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_enter > t_exit || t_exit <= 0.0) return std::numeric_limits<double>::infinity();
  return t_enter > 0.0 ? t_enter : std::numeric_limits<double>::infinity();
}

// Render one sweep by casting a ray per raster pixel against every actor box
// and the ground plane (z = 0); the nearest hit within max range wins.
// `hit_actor`, when given, receives the winning actor index per pixel
// (-1: ground, no hit, or invalid).
inline geom::RangeImage raycast_sweep_at(const Scene& scene, double time_offset,
                                         std::vector<int>* hit_actor = nullptr) {
  const geom::RasterConfig& cfg = scene.lidar.raster;
  const geom::Pose pose = scene.ego_pose_at(time_offset);
  geom::RangeImage img = geom::make_empty_range_image(cfg, pose, 0, scene.lidar.map_channels);

  const Eigen::Vector3d origin = pose.origin_in_world();
  const Eigen::Matrix3d sensor_to_world = pose.rotation.transpose();

  std::vector<Actor> actors(scene.actors.size());
  for (std::size_t i = 0; i < actors.size(); ++i)
    actors[i] = scene.actor_at(static_cast<int>(i), time_offset);

  if (hit_actor) hit_actor->assign(static_cast<std::size_t>(cfg.height) * cfg.width, -1);

  for (int row = 0; row < cfg.height; ++row) {
    for (int col = 0; col < cfg.width; ++col) {
      const geom::Sphericald beam{1.0, cfg.col_to_azimuth(col), cfg.row_to_elevation(row)};
      const Eigen::Vector3d dir = sensor_to_world * geom::spherical_to_cartesian(beam);

      double best = std::numeric_limits<double>::infinity();
      int best_actor = -1;
      for (std::size_t i = 0; i < actors.size(); ++i) {
        const double t = ray_box_distance(origin, dir, actors[i]);
        if (t < best) {
          best = t;
          best_actor = static_cast<int>(i);
        }
      }
      if (scene.lidar.ground_plane && dir.z() < -1e-9) {
        const double t_ground = -origin.z() / dir.z();
        if (t_ground > 0.0 && t_ground < best) {
          best = t_ground;
          best_actor = -1;
        }
      }
      if (!std::isfinite(best) || best > scene.lidar.max_range) continue;

      img.at(row, col, geom::RangeImage::kRange) = static_cast<float>(best);
      const double refl = best_actor >= 0
                              ? scene.lidar.class_reflectance[actors[best_actor].class_id - 1]
                              : scene.lidar.ground_reflectance;
      img.at(row, col, geom::RangeImage::kReflectance) = static_cast<float>(refl);
      img.at(row, col, geom::RangeImage::kValid) = 1.0f;
      if (scene.lidar.map_channels) {
        const double hit_z = origin.z() + best * dir.z();
        img.at(row, col, geom::RangeImage::kHeightAboveGround) =
            static_cast<float>(std::max(hit_z, 0.0));
        img.at(row, col, geom::RangeImage::kRoadFlag) = 1.0f;
      }
      if (hit_actor) (*hit_actor)[static_cast<std::size_t>(row) * cfg.width + col] = best_actor;
    }
  }
  return img;
}

// Tick 0 is the current sweep; negative ticks are earlier sweeps on the
// scene's uniform tick grid.
inline geom::RangeImage raycast_sweep(const Scene& scene, int tick,
                                      std::vector<int>* hit_actor = nullptr) {
  geom::RangeImage img = raycast_sweep_at(scene, tick * scene.sweep_dt, hit_actor);
  img.sweep_index = tick;
  return img;
}

}  // namespace rvm::sim
