#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rvm::geom {

// Range r >= 0, azimuth theta in (-pi, pi], elevation phi in [-pi/2, pi/2].
template <typename Scalar = double>
struct Spherical {
  Scalar range{};
  Scalar azimuth{};
  Scalar elevation{};
};

using Sphericald = Spherical<double>;

// Wrap an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar a = std::fmod(angle + std::numbers::pi_v<Scalar>, two_pi);
  if (a <= Scalar(0)) a += two_pi;
  return a - std::numbers::pi_v<Scalar>;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> spherical_to_cartesian(const Spherical<Scalar>& c) {
  const Scalar rc = c.range * std::cos(c.elevation);
  return {rc * std::cos(c.azimuth), rc * std::sin(c.azimuth), c.range * std::sin(c.elevation)};
}

template <typename Scalar>
Spherical<Scalar> cartesian_to_spherical(const Eigen::Matrix<Scalar, 3, 1>& x) {
  const Scalar r = x.norm();
  if (r <= Scalar(0)) throw std::invalid_argument("cartesian_to_spherical: zero-norm point");
  Spherical<Scalar> c;
  c.range = r;
  c.azimuth = std::atan2(x.y(), x.x());
  c.elevation = std::asin(std::clamp(x.z() / r, Scalar(-1), Scalar(1)));
  return c;
}

// CCW rotation by `angle` applied to a 2-vector.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> rotation2(Scalar angle) {
  const Scalar c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix<Scalar, 2, 2> r;
  r << c, -s, s, c;
  return r;
}

}  // namespace rvm::geom
