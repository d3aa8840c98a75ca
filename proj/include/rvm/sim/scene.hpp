#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rvm/core/rng.hpp"
#include "rvm/geom/pose.hpp"
#include "rvm/geom/range_image.hpp"
#include "rvm/sim/actor.hpp"

namespace rvm::sim {

struct LidarConfig {
  geom::RasterConfig raster = geom::RasterConfig::uniform(256, 32, 0.0349066, -0.349066);
  double max_range = 75.0;
  double sensor_height = 2.0;
  bool map_channels = false;
  bool ground_plane = true;
  double ground_reflectance = 0.3;
  std::vector<double> class_reflectance = {0.8};  // indexed by class_id - 1
};

struct SimConfig {
  int scene_count = 200;
  LidarConfig lidar;
  int sweep_count = 5;    // past sweeps including the current one
  double sweep_dt = 0.1;  // seconds between sweeps
  int horizon = 6;        // future steps
  double horizon_dt = 0.5;
  int class_count = 1;  // object classes, background excluded
  int actors_min = 2, actors_max = 5;
  double actor_speed_max = 10.0;
  double actor_yaw_rate_max = 0.15;
  double actor_length_min = 3.8, actor_length_max = 5.2;
  double actor_width_min = 1.7, actor_width_max = 2.1;
  double actor_height_min = 1.4, actor_height_max = 1.8;
  double spawn_radius_min = 7.0, spawn_radius_max = 42.0;
  double spawn_separation = 9.0;
  double ego_speed_max = 8.0;
  double ego_yaw_rate_max = 0.05;

  void validate() const {
    if (scene_count < 0) throw std::invalid_argument("SimConfig: scene_count must be >= 0");
    if (sweep_count < 1) throw std::invalid_argument("SimConfig: sweep_count must be >= 1");
    if (sweep_dt <= 0 || horizon_dt <= 0) throw std::invalid_argument("SimConfig: bad tick spacing");
    if (horizon < 1) throw std::invalid_argument("SimConfig: horizon must be >= 1");
    if (class_count < 1 ||
        static_cast<int>(lidar.class_reflectance.size()) < class_count)
      throw std::invalid_argument("SimConfig: need a reflectance per object class");
    if (actors_min < 0 || actors_max < actors_min)
      throw std::invalid_argument("SimConfig: bad actor count range");
    lidar.raster.validate();
  }
};

// Ego platform state, itself a constant-turn-rate mover in the ground plane.
struct EgoState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double heading = 0.0;
  double speed = 0.0;
  double yaw_rate = 0.0;
};

struct Scene {
  std::vector<Actor> actors;  // state at the current sweep (t = 0)
  EgoState ego;               // state at t = 0
  LidarConfig lidar;
  double sweep_dt = 0.1;  // seconds between sweep ticks

  // Ego planar state at time offset `dt` from the current sweep.
  EgoState ego_at(double dt) const {
    Actor mover;
    mover.center = ego.position;
    mover.heading = ego.heading;
    mover.speed = ego.speed;
    mover.yaw_rate = ego.yaw_rate;
    const Actor moved = detail::advance_actor(mover, dt);
    EgoState out = ego;
    out.position = moved.center;
    out.heading = moved.heading;
    return out;
  }

  geom::Pose ego_pose_at(double dt) const {
    const EgoState e = ego_at(dt);
    return geom::Pose::from_planar(e.position, e.heading, lidar.sensor_height);
  }

  Actor actor_at(int index, double dt) const {
    return detail::advance_actor(actors[index], dt);
  }
};

// Deterministic random scene: moving ego plus separated box actors scattered
// around it.
inline Scene make_random_scene(const SimConfig& cfg, Rng rng) {
  Scene scene;
  scene.lidar = cfg.lidar;
  scene.sweep_dt = cfg.sweep_dt;
  scene.ego.speed = rng.uniform(0.0, cfg.ego_speed_max);
  scene.ego.yaw_rate = rng.uniform(-cfg.ego_yaw_rate_max, cfg.ego_yaw_rate_max);

  const int count = rng.uniform_int(cfg.actors_min, cfg.actors_max);
  for (int i = 0; i < count; ++i) {
    Actor a;
    a.class_id = rng.uniform_int(1, cfg.class_count);
    a.length = rng.uniform(cfg.actor_length_min, cfg.actor_length_max);
    a.width = rng.uniform(cfg.actor_width_min, cfg.actor_width_max);
    a.height = rng.uniform(cfg.actor_height_min, cfg.actor_height_max);
    a.heading = rng.uniform(-3.14159265358979, 3.14159265358979);
    a.speed = rng.uniform(0.0, cfg.actor_speed_max);
    a.yaw_rate = rng.uniform(-cfg.actor_yaw_rate_max, cfg.actor_yaw_rate_max);
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      const double radius = rng.uniform(cfg.spawn_radius_min, cfg.spawn_radius_max);
      const double angle = rng.uniform(-3.14159265358979, 3.14159265358979);
      a.center = radius * Eigen::Vector2d(std::cos(angle), std::sin(angle));
      placed = true;
      for (const Actor& other : scene.actors)
        if ((other.center - a.center).norm() < cfg.spawn_separation) placed = false;
    }
    if (placed) scene.actors.push_back(a);
  }
  return scene;
}

}  // namespace rvm::sim
