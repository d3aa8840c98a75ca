#pragma once

#include <Eigen/Core>
#include <array>
#include <stdexcept>
#include <vector>

namespace rvm::traj {

struct TrajectoryConfig {
  int horizon = 6;          // T: future steps beyond t=0
  double step_seconds = 0.5;
  static constexpr int kDims = 8;  // four BEV corners x 2 coordinates

  int step_count() const { return horizon + 1; }

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("TrajectoryConfig: horizon must be >= 1");
  }
};

// Raw per-pixel network outputs, decoded as far as probabilities.
// Orientation is encoded as (cos 2w, sin 2w); uncertainties as log-scales.
struct PerPointPrediction {
  Eigen::VectorXd class_probs;  // simplex over object classes + background
  double length = 0.0, width = 0.0;
  std::vector<Eigen::Vector2d> displacement;  // (d_t^x, d_t^y), t = 0..T
  std::vector<Eigen::Vector2d> orientation;   // (w_t^x, w_t^y)
  std::vector<Eigen::Vector2d> log_scale;     // (s_t^x, s_t^y)

  int step_count() const { return static_cast<int>(displacement.size()); }
};

// One decoded timestep: oriented BEV box plus the Laplace scales shared by
// all four corners at that step.
struct BoxStep {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double heading = 0.0;
  std::array<Eigen::Vector2d, 4> corners{};  // front-left, front-right, rear-right, rear-left
  double scale_along = 1.0;  // b_t^x, meters
  double scale_cross = 1.0;  // b_t^y, meters
};

struct BoxTrajectory {
  double length = 0.0, width = 0.0;
  std::vector<BoxStep> steps;  // t = 0..T

  int step_count() const { return static_cast<int>(steps.size()); }
};

}  // namespace rvm::traj
