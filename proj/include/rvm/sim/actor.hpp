#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace rvm::sim {

// Box actor with constant-turn-rate-and-speed kinematics. Dimensions stay
// fixed over time.
struct Actor {
  int class_id = 1;  // 0 is reserved for background
  double length = 4.5, width = 1.9;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // world BEV, meters
  double heading = 0.0;                              // radians
  double speed = 0.0;                                // m/s
  double yaw_rate = 0.0;                             // rad/s
  double height = 1.6;                               // meters
  double z_offset = 0.0;                             // box bottom above ground
};

namespace detail {
// Exact constant-turn-rate step for any dt (sign included): the chord of the
// arc has length v*dt*sinc(w*dt/2) along the mean heading.
inline Actor advance_actor(const Actor& a, double dt) {
  Actor out = a;
  const double half = 0.5 * a.yaw_rate * dt;
  const double sinc = std::abs(half) < 1e-12 ? 1.0 : std::sin(half) / half;
  const double dir = a.heading + half;
  out.center += a.speed * dt * sinc * Eigen::Vector2d(std::cos(dir), std::sin(dir));
  out.heading += a.yaw_rate * dt;
  return out;
}
}  // namespace detail

inline Actor step_actor(const Actor& a, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("step_actor: dt must be positive");
  if (a.length <= 0.0 || a.width <= 0.0) throw std::invalid_argument("step_actor: bad dimensions");
  return detail::advance_actor(a, dt);
}

}  // namespace rvm::sim
