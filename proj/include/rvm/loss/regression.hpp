#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "rvm/geom/spherical.hpp"
#include "rvm/loss/laplace.hpp"
#include "rvm/traj/decode.hpp"
#include "rvm/traj/types.hpp"

namespace rvm::loss {

// Layout of the regression slice of the network's per-pixel output:
// [l, w, then per step t: dx, dy, wx, wy, sx, sy].
namespace reg {
inline constexpr int kLength = 0;
inline constexpr int kWidth = 1;
inline constexpr int kPerStep = 6;
inline int base(int t) { return 2 + kPerStep * t; }
inline int channel_count(int horizon) { return 2 + kPerStep * (horizon + 1); }
}  // namespace reg

// Ground-truth trajectory for one supervised pixel, in the current sweep's
// BEV frame. Headings must be continuous across steps.
struct TrajectoryTarget {
  double length = 0.0, width = 0.0;
  std::vector<Eigen::Vector2d> centers;  // t = 0..T
  std::vector<double> headings;          // t = 0..T
};

namespace detail {
inline constexpr double kCornerSign[4][2] = {{1, 1}, {1, -1}, {-1, -1}, {-1, 1}};
}

// Loss (and gradient w.r.t. the raw regression channels) for one pixel:
// decode the box trajectory, rotate predicted and ground-truth corners into
// the track frame of the predicted heading, and compare per corner dimension
// with the Laplace KL (or plain L1 when `l1_mode`). Gradients flow through
// the displacement recursion, the heading recursion, the box size, the
// log-scales, and the track-frame rotation itself. The returned loss and the
// accumulated gradients are both multiplied by `scale`.
template <typename Scalar>
double pixel_regression_loss(std::span<const Scalar> channels, const traj::BevPoint& point,
                             const TrajectoryTarget& target, std::span<const double> scale_gt,
                             std::span<const double> step_weight, bool l1_mode, double scale,
                             std::span<Scalar> grad_channels) {
  const int steps = static_cast<int>(target.centers.size());
  if (steps < 1 || static_cast<int>(target.headings.size()) != steps)
    throw std::invalid_argument("pixel_regression_loss: malformed target");
  if (static_cast<int>(channels.size()) != reg::channel_count(steps - 1))
    throw std::invalid_argument("pixel_regression_loss: channel count mismatch");
  if (scale_gt.size() != std::size_t(steps) || step_weight.size() != std::size_t(steps))
    throw std::invalid_argument("pixel_regression_loss: schedule length mismatch");
  const bool with_grad = !grad_channels.empty();
  if (with_grad && grad_channels.size() != channels.size())
    throw std::invalid_argument("pixel_regression_loss: gradient size mismatch");

  const double length = double(channels[reg::kLength]);
  const double width = double(channels[reg::kWidth]);
  const Eigen::Matrix2d r_theta = geom::rotation2(point.azimuth);

  // Decode pass.
  std::vector<Eigen::Vector2d> centers(steps);
  std::vector<double> headings(steps), b_along(steps), b_cross(steps), rho2(steps);
  {
    Eigen::Vector2d c(point.x, point.y);
    double phi = point.azimuth;
    for (int t = 0; t < steps; ++t) {
      const int base = reg::base(t);
      const double wx = double(channels[base + 2]), wy = double(channels[base + 3]);
      rho2[t] = wx * wx + wy * wy;
      if (rho2[t] == 0.0)
        throw std::invalid_argument("pixel_regression_loss: orientation encoding (0, 0)");
      phi += 0.5 * std::atan2(wy, wx);
      c += r_theta * Eigen::Vector2d(double(channels[base + 0]), double(channels[base + 1]));
      centers[t] = c;
      headings[t] = phi;
      b_along[t] = l1_mode ? 1.0 : std::exp(double(channels[base + 4]));
      b_cross[t] = l1_mode ? 1.0 : std::exp(double(channels[base + 5]));
    }
  }

  double loss = 0.0;
  std::vector<Eigen::Vector2d> g_center(steps, Eigen::Vector2d::Zero());
  std::vector<double> g_heading(steps, 0.0);
  double g_length = 0.0, g_width = 0.0;

  for (int t = 0; t < steps; ++t) {
    const double w_t = step_weight[t];
    const double c = std::cos(headings[t]), s = std::sin(headings[t]);
    Eigen::Matrix2d track;   // R_phi^T
    track << c, s, -s, c;
    Eigen::Matrix2d dtrack;  // d(R_phi^T)/dphi
    dtrack << -s, c, -c, -s;
    const Eigen::Matrix2d r_gt = geom::rotation2(target.headings[t]);

    for (int k = 0; k < 4; ++k) {
      const Eigen::Vector2d half(detail::kCornerSign[k][0] * 0.5 * length,
                                 detail::kCornerSign[k][1] * 0.5 * width);
      const Eigen::Vector2d half_gt(detail::kCornerSign[k][0] * 0.5 * target.length,
                                    detail::kCornerSign[k][1] * 0.5 * target.width);
      const Eigen::Vector2d corner_gt = target.centers[t] + r_gt * half_gt;
      const Eigen::Vector2d u = track * centers[t] + half;
      const Eigen::Vector2d u_gt = track * corner_gt;

      Eigen::Vector2d g_u = Eigen::Vector2d::Zero();
      for (int axis = 0; axis < 2; ++axis) {
        const double pred = u[axis], gt = u_gt[axis];
        const double b = axis == 0 ? b_along[t] : b_cross[t];
        if (l1_mode) {
          loss += w_t * std::abs(pred - gt);
          if (with_grad) {
            const double d = pred - gt;
            g_u[axis] = w_t * scale * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
          }
        } else {
          loss += w_t * laplace_kl(gt, scale_gt[t], pred, b);
          if (with_grad) {
            g_u[axis] = w_t * scale * laplace_kl_dmu(gt, scale_gt[t], pred, b);
            const int sc = reg::base(t) + (axis == 0 ? 4 : 5);
            grad_channels[sc] +=
                Scalar(w_t * scale * laplace_kl_dlogb(gt, scale_gt[t], pred, b));
          }
        }
      }
      if (with_grad) {
        // u depends on (center, phi, l, w); u_gt depends on phi alone.
        g_center[t] += track.transpose() * g_u;
        g_length += 0.5 * detail::kCornerSign[k][0] * g_u.x();
        g_width += 0.5 * detail::kCornerSign[k][1] * g_u.y();
        g_heading[t] += g_u.dot(dtrack * centers[t]) - g_u.dot(dtrack * corner_gt);
      }
    }
  }

  if (with_grad) {
    grad_channels[reg::kLength] += Scalar(g_length);
    grad_channels[reg::kWidth] += Scalar(g_width);
    for (int t = steps - 1; t >= 0; --t) {
      const int base = reg::base(t);
      const Eigen::Vector2d g_d = r_theta.transpose() * g_center[t];
      grad_channels[base + 0] += Scalar(g_d.x());
      grad_channels[base + 1] += Scalar(g_d.y());
      const double wx = double(channels[base + 2]), wy = double(channels[base + 3]);
      // The atan2 adjoint scales with 1/rho^2; floor it so a near-degenerate
      // orientation encoding cannot blow up the step.
      const double rho2_safe = std::max(rho2[t], 1e-4);
      grad_channels[base + 2] += Scalar(g_heading[t] * 0.5 * (-wy / rho2_safe));
      grad_channels[base + 3] += Scalar(g_heading[t] * 0.5 * (wx / rho2_safe));
      if (t > 0) {
        g_center[t - 1] += g_center[t];
        g_heading[t - 1] += g_heading[t];
      }
    }
  }
  return loss * scale;
}

// One supervised pixel of a frame's regression batch.
template <typename Scalar>
struct RegressionSample {
  std::span<const Scalar> channels;
  traj::BevPoint point;
  const TrajectoryTarget* target = nullptr;
  double pixel_weight = 1.0;  // 1 / (pixels on this object)
  std::span<Scalar> grad;     // empty to skip gradients
};

// Mean KL over steps, objects and corner dimensions: each pixel contributes
// with weight 1/(pixels on its object) so `object_count` objects average to
// the per-object form regardless of how many points fall on each.
template <typename Scalar>
double regression_loss(std::span<RegressionSample<Scalar>> samples, int object_count, int horizon,
                       std::span<const double> scale_gt, std::span<const double> step_weight,
                       bool l1_mode) {
  if (object_count <= 0) return 0.0;
  const double norm =
      1.0 / (double(horizon + 1) * double(object_count) * double(traj::TrajectoryConfig::kDims));
  double total = 0.0;
  for (RegressionSample<Scalar>& sample : samples) {
    total += pixel_regression_loss(sample.channels, sample.point, *sample.target, scale_gt,
                                   step_weight, l1_mode, norm * sample.pixel_weight, sample.grad);
  }
  return total;
}

}  // namespace rvm::loss
