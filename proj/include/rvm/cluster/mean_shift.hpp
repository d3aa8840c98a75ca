#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "rvm/eval/iou.hpp"
#include "rvm/traj/decode.hpp"
#include "rvm/traj/types.hpp"

namespace rvm::cluster {

// One per-pixel trajectory prediction entering clustering.
struct ClusterPoint {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // decoded t=0 box center
  double class_prob = 0.0;
  int class_id = 1;
  traj::BoxTrajectory trajectory;
};

struct Detection {
  double score = 0.0;  // mean class probability of the supporting pixels
  int class_id = 1;
  int pixel_count = 0;
  traj::BoxTrajectory trajectory;
};

namespace detail {

struct CellKey {
  int class_id;
  std::int64_t ix, iy;
  bool operator<(const CellKey& o) const {
    if (class_id != o.class_id) return class_id < o.class_id;
    if (ix != o.ix) return ix < o.ix;
    return iy < o.iy;
  }
};

inline bool point_before(const ClusterPoint& a, const ClusterPoint& b) {
  if (a.center.x() != b.center.x()) return a.center.x() < b.center.x();
  if (a.center.y() != b.center.y()) return a.center.y() < b.center.y();
  return a.class_prob < b.class_prob;
}

}  // namespace detail

// Grid-hash approximate mean-shift with a flat kernel over t=0 centers.
// Cells are seeded at bandwidth resolution, shifted to the weighted mean of
// the points within one bandwidth until the displacement falls below
// 1e-3 * bandwidth (or 20 iterations), then merged when closer than one
// bandwidth. Each detection aggregates its member predictions by class
// probability; the score is the plain mean class probability. Results do not
// depend on the input order.
inline std::vector<Detection> mean_shift_cluster(const std::vector<ClusterPoint>& points,
                                                 double bandwidth, double score_threshold,
                                                 const Eigen::Vector2d& grid_origin =
                                                     Eigen::Vector2d::Zero()) {
  if (bandwidth <= 0.0) throw std::invalid_argument("mean_shift_cluster: bandwidth must be > 0");
  std::vector<Detection> detections;

  // Deterministic point order regardless of caller ordering.
  std::vector<const ClusterPoint*> kept;
  for (const ClusterPoint& p : points)
    if (p.class_prob >= score_threshold) kept.push_back(&p);
  std::sort(kept.begin(), kept.end(),
            [](const ClusterPoint* a, const ClusterPoint* b) { return detail::point_before(*a, *b); });
  if (kept.empty()) return detections;

  auto cell_of = [&](const Eigen::Vector2d& c, int class_id) {
    return detail::CellKey{class_id,
                           static_cast<std::int64_t>(std::floor((c.x() - grid_origin.x()) / bandwidth)),
                           static_cast<std::int64_t>(std::floor((c.y() - grid_origin.y()) / bandwidth))};
  };

  std::map<detail::CellKey, std::vector<int>> cells;
  for (int i = 0; i < static_cast<int>(kept.size()); ++i)
    cells[cell_of(kept[i]->center, kept[i]->class_id)].push_back(i);

  struct Mode {
    detail::CellKey origin_cell;
    Eigen::Vector2d position;
    std::vector<int> members;
  };
  std::vector<Mode> modes;
  for (const auto& [key, members] : cells) {
    Mode m;
    m.origin_cell = key;
    m.members = members;
    double wsum = 0.0;
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (int i : members) {
      acc += kept[i]->class_prob * kept[i]->center;
      wsum += kept[i]->class_prob;
    }
    m.position = acc / wsum;
    modes.push_back(std::move(m));
  }

  // Shift each cell mode over the flat kernel; one bandwidth never reaches
  // beyond the 3x3 cell neighbourhood of the mode's current cell.
  for (Mode& m : modes) {
    for (int iter = 0; iter < 20; ++iter) {
      const detail::CellKey center_cell = cell_of(m.position, m.origin_cell.class_id);
      double wsum = 0.0;
      Eigen::Vector2d acc = Eigen::Vector2d::Zero();
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          const auto it = cells.find(
              detail::CellKey{center_cell.class_id, center_cell.ix + dx, center_cell.iy + dy});
          if (it == cells.end()) continue;
          for (int i : it->second) {
            if ((kept[i]->center - m.position).norm() <= bandwidth) {
              acc += kept[i]->class_prob * kept[i]->center;
              wsum += kept[i]->class_prob;
            }
          }
        }
      }
      if (wsum <= 0.0) break;
      const Eigen::Vector2d next = acc / wsum;
      const double shift = (next - m.position).norm();
      m.position = next;
      if (shift < 1e-3 * bandwidth) break;
    }
  }

  // Merge converged modes within one bandwidth; equidistant candidates go to
  // the larger cluster, then the lower original cell index.
  struct Cluster {
    int class_id;
    Eigen::Vector2d position;
    std::vector<int> members;
    detail::CellKey first_cell;
  };
  std::vector<Cluster> clusters;
  for (const Mode& m : modes) {
    int best = -1;
    double best_dist = 0.0;
    for (int ci = 0; ci < static_cast<int>(clusters.size()); ++ci) {
      const Cluster& cl = clusters[ci];
      if (cl.class_id != m.origin_cell.class_id) continue;
      const double d = (cl.position - m.position).norm();
      if (d > bandwidth) continue;
      const bool tie = best >= 0 && d == best_dist &&
                       (cl.members.size() > clusters[best].members.size() ||
                        (cl.members.size() == clusters[best].members.size() &&
                         cl.first_cell < clusters[best].first_cell));
      if (best < 0 || d < best_dist || tie) {
        best = ci;
        best_dist = d;
      }
    }
    if (best < 0) {
      clusters.push_back({m.origin_cell.class_id, m.position, m.members, m.origin_cell});
    } else {
      Cluster& cl = clusters[best];
      cl.members.insert(cl.members.end(), m.members.begin(), m.members.end());
      double wsum = 0.0;
      Eigen::Vector2d acc = Eigen::Vector2d::Zero();
      for (int i : cl.members) {
        acc += kept[i]->class_prob * kept[i]->center;
        wsum += kept[i]->class_prob;
      }
      cl.position = acc / wsum;
    }
  }

  for (Cluster& cl : clusters) {
    std::sort(cl.members.begin(), cl.members.end());
    const int steps = kept[cl.members.front()]->trajectory.step_count();
    double prob_sum = 0.0, score_sum = 0.0;
    double length = 0.0, width = 0.0;
    std::vector<Eigen::Vector2d> centers(steps, Eigen::Vector2d::Zero());
    std::vector<Eigen::Vector2d> heading_enc(steps, Eigen::Vector2d::Zero());
    std::vector<double> b_along(steps, 0.0), b_cross(steps, 0.0);
    for (int i : cl.members) {
      const ClusterPoint& p = *kept[i];
      const double w = p.class_prob;
      prob_sum += w;
      score_sum += p.class_prob;
      length += w * p.trajectory.length;
      width += w * p.trajectory.width;
      for (int t = 0; t < steps; ++t) {
        const traj::BoxStep& s = p.trajectory.steps[t];
        centers[t] += w * s.center;
        heading_enc[t] += w * Eigen::Vector2d(std::cos(2 * s.heading), std::sin(2 * s.heading));
        b_along[t] += w * s.scale_along;
        b_cross[t] += w * s.scale_cross;
      }
    }
    Detection det;
    det.class_id = cl.class_id;
    det.pixel_count = static_cast<int>(cl.members.size());
    det.score = score_sum / det.pixel_count;
    det.trajectory.length = length / prob_sum;
    det.trajectory.width = width / prob_sum;
    det.trajectory.steps.resize(steps);
    double prev_heading = 0.0;
    for (int t = 0; t < steps; ++t) {
      traj::BoxStep& s = det.trajectory.steps[t];
      s.center = centers[t] / prob_sum;
      double heading = 0.5 * std::atan2(heading_enc[t].y(), heading_enc[t].x());
      if (t > 0) {
        // Keep the double-angle branch continuous along the trajectory.
        while (heading - prev_heading > 1.5707963267948966) heading -= 3.141592653589793;
        while (heading - prev_heading < -1.5707963267948966) heading += 3.141592653589793;
      }
      prev_heading = heading;
      s.heading = heading;
      s.corners = traj::corners_from_params(s.center, s.heading, det.trajectory.length,
                                            det.trajectory.width);
      s.scale_along = b_along[t] / prob_sum;
      s.scale_cross = b_cross[t] / prob_sum;
    }
    detections.push_back(std::move(det));
  }
  return detections;
}

// Greedy non-maximum suppression by descending score on the t=0 boxes.
inline std::vector<Detection> suppress_overlaps(std::vector<Detection> detections,
                                                double iou_threshold) {
  std::sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.pixel_count != b.pixel_count) return a.pixel_count > b.pixel_count;
    const auto& ca = a.trajectory.steps.front().center;
    const auto& cb = b.trajectory.steps.front().center;
    if (ca.x() != cb.x()) return ca.x() < cb.x();
    return ca.y() < cb.y();
  });
  std::vector<Detection> kept;
  for (Detection& d : detections) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (k.class_id != d.class_id) continue;
      if (eval::rotated_iou(k.trajectory.steps.front().corners,
                            d.trajectory.steps.front().corners) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

}  // namespace rvm::cluster
