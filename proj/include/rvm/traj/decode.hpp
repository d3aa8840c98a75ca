#pragma once

#include <cmath>
#include <stdexcept>

#include "rvm/geom/spherical.hpp"
#include "rvm/traj/types.hpp"

namespace rvm::traj {

// A LiDAR point in the current sweep's BEV: position plus its azimuth angle.
struct BevPoint {
  double x = 0.0, y = 0.0;
  double azimuth = 0.0;
};

inline double half_atan2(const Eigen::Vector2d& orientation) {
  if (orientation.x() == 0.0 && orientation.y() == 0.0)
    throw std::invalid_argument("decode: orientation encoding (0, 0) has no angle");
  return 0.5 * std::atan2(orientation.y(), orientation.x());
}

// t = 0: the box center is the point plus its displacement rotated by the
// point's azimuth; heading is azimuth plus half the decoded double-angle.
inline std::pair<Eigen::Vector2d, double> decode_t0(const BevPoint& point,
                                                    const Eigen::Vector2d& displacement,
                                                    const Eigen::Vector2d& orientation) {
  const Eigen::Vector2d center =
      Eigen::Vector2d(point.x, point.y) + geom::rotation2(point.azimuth) * displacement;
  return {center, point.azimuth + half_atan2(orientation)};
}

// t >= 1: displacements accumulate from the previous center; the rotation
// frame stays fixed at the point's azimuth.
inline std::pair<Eigen::Vector2d, double> decode_step(const Eigen::Vector2d& prev_center,
                                                      double prev_heading, double azimuth,
                                                      const Eigen::Vector2d& displacement,
                                                      const Eigen::Vector2d& orientation) {
  const Eigen::Vector2d center = prev_center + geom::rotation2(azimuth) * displacement;
  return {center, prev_heading + half_atan2(orientation)};
}

// Corner order: front-left, front-right, rear-right, rear-left.
inline std::array<Eigen::Vector2d, 4> corners_from_params(const Eigen::Vector2d& center,
                                                          double heading, double length,
                                                          double width) {
  const Eigen::Matrix2d r = geom::rotation2(heading);
  const double hl = 0.5 * length, hw = 0.5 * width;
  return {center + r * Eigen::Vector2d(hl, hw), center + r * Eigen::Vector2d(hl, -hw),
          center + r * Eigen::Vector2d(-hl, -hw), center + r * Eigen::Vector2d(-hl, hw)};
}

// Express corners in the track-aligned frame of a box heading `heading`:
// x along the direction of motion, y across it.
inline std::array<Eigen::Vector2d, 4> rotate_to_track_frame(
    const std::array<Eigen::Vector2d, 4>& corners, double heading) {
  const Eigen::Matrix2d rt = geom::rotation2(heading).transpose();
  std::array<Eigen::Vector2d, 4> out;
  for (int k = 0; k < 4; ++k) out[k] = rt * corners[k];
  return out;
}

inline BoxTrajectory decode_trajectory(const BevPoint& point, const PerPointPrediction& pred) {
  BoxTrajectory traj;
  traj.length = pred.length;
  traj.width = pred.width;
  traj.steps.resize(pred.step_count());
  Eigen::Vector2d center;
  double heading = 0.0;
  for (int t = 0; t < pred.step_count(); ++t) {
    if (t == 0) {
      std::tie(center, heading) = decode_t0(point, pred.displacement[0], pred.orientation[0]);
    } else {
      std::tie(center, heading) =
          decode_step(center, heading, point.azimuth, pred.displacement[t], pred.orientation[t]);
    }
    BoxStep& s = traj.steps[t];
    s.center = center;
    s.heading = heading;
    s.corners = corners_from_params(center, heading, pred.length, pred.width);
    s.scale_along = std::exp(pred.log_scale[t].x());
    s.scale_cross = std::exp(pred.log_scale[t].y());
  }
  return traj;
}

// Laplace log-likelihood of `observed` under the trajectory's per-corner
// distributions, evaluated in the track frame of the predicted headings.
inline double trajectory_log_prob(const BoxTrajectory& traj, const BoxTrajectory& observed) {
  if (traj.step_count() != observed.step_count())
    throw std::invalid_argument("trajectory_log_prob: step count mismatch");
  double log_prob = 0.0;
  for (int t = 0; t < traj.step_count(); ++t) {
    const BoxStep& p = traj.steps[t];
    const BoxStep& o = observed.steps[t];
    if (p.scale_along <= 0.0 || p.scale_cross <= 0.0)
      throw std::invalid_argument("trajectory_log_prob: non-positive scale");
    const auto pred_track = rotate_to_track_frame(p.corners, p.heading);
    const auto obs_track = rotate_to_track_frame(o.corners, p.heading);
    for (int k = 0; k < 4; ++k) {
      const double rx = std::abs(pred_track[k].x() - obs_track[k].x());
      const double ry = std::abs(pred_track[k].y() - obs_track[k].y());
      log_prob += -std::log(2.0 * p.scale_along) - rx / p.scale_along;
      log_prob += -std::log(2.0 * p.scale_cross) - ry / p.scale_cross;
    }
  }
  return log_prob;
}

}  // namespace rvm::traj
