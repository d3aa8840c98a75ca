#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rvm/eval/iou.hpp"
#include "rvm/traj/types.hpp"

namespace rvm::eval {

struct EvalDetection {
  int frame = 0;
  int class_id = 1;
  double score = 0.0;
  traj::BoxTrajectory trajectory;
};

struct EvalGroundTruth {
  int frame = 0;
  int class_id = 1;
  traj::BoxTrajectory trajectory;
};

// Raised when a requested recall point cannot be reached.
struct RecallUnreachable : std::runtime_error {
  double max_recall;
  explicit RecallUnreachable(double achieved)
      : std::runtime_error("requested recall unreachable; max achievable recall is " +
                           std::to_string(achieved)),
        max_recall(achieved) {}
};

namespace detail {
// Stable detection order: score descending with deterministic tie-breaking.
inline std::vector<int> score_order(const std::vector<EvalDetection>& dets) {
  std::vector<int> order(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    if (dets[a].frame != dets[b].frame) return dets[a].frame < dets[b].frame;
    return a < b;
  });
  return order;
}

// Greedy matching in score order: each detection takes the highest-IoU
// unmatched ground truth of its frame at or above the threshold.
struct GreedyMatches {
  std::vector<int> det_to_gt;  // indexed like score order; -1 = false positive
  std::vector<int> order;
};

inline GreedyMatches greedy_match(const std::vector<EvalDetection>& dets,
                                  const std::vector<EvalGroundTruth>& gts, double iou_threshold) {
  GreedyMatches out;
  out.order = score_order(dets);
  out.det_to_gt.assign(dets.size(), -1);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t rank = 0; rank < out.order.size(); ++rank) {
    const EvalDetection& det = dets[out.order[rank]];
    int best = -1;
    double best_iou = iou_threshold;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].frame != det.frame || gts[g].class_id != det.class_id) continue;
      const double iou =
          rotated_iou(det.trajectory.steps.front().corners, gts[g].trajectory.steps.front().corners);
      if (iou >= best_iou && (best < 0 || iou > best_iou)) {
        best = static_cast<int>(g);
        best_iou = iou;
      }
    }
    if (best >= 0) {
      taken[best] = true;
      out.det_to_gt[rank] = best;
    }
  }
  return out;
}
}  // namespace detail

// Average precision with all-point interpolation: area under the
// precision-recall curve with precision interpolated to its running maximum
// from the right.
inline double average_precision(const std::vector<EvalDetection>& dets,
                                const std::vector<EvalGroundTruth>& gts, double iou_threshold) {
  if (gts.empty()) throw std::invalid_argument("average_precision: no ground truths");
  if (dets.empty()) return 0.0;
  const detail::GreedyMatches matches = detail::greedy_match(dets, gts, iou_threshold);
  const std::size_t n = matches.order.size();
  std::vector<double> precision(n), recall(n);
  int tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (matches.det_to_gt[i] >= 0) ++tp;
    precision[i] = double(tp) / double(i + 1);
    recall[i] = double(tp) / double(gts.size());
  }
  for (std::size_t i = n - 1; i > 0; --i) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

struct L2Result {
  std::vector<double> per_step_m;  // mean center error per trajectory step
  double score_threshold = 0.0;    // operating point that reached the recall
  double achieved_recall = 0.0;
  std::vector<std::pair<int, int>> matches;  // (detection index, ground-truth index)
};

// Mean center L2 error per step over the matched pairs at the operating
// point where recall first reaches `recall_point` (single global threshold).
inline L2Result l2_at_recall(const std::vector<EvalDetection>& dets,
                             const std::vector<EvalGroundTruth>& gts, double recall_point,
                             double match_iou) {
  if (gts.empty()) throw std::invalid_argument("l2_at_recall: no ground truths");
  const detail::GreedyMatches matches = detail::greedy_match(dets, gts, match_iou);
  const std::size_t n = matches.order.size();
  int tp = 0;
  std::size_t cut = 0;
  bool reached = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (matches.det_to_gt[i] >= 0) ++tp;
    if (double(tp) / double(gts.size()) >= recall_point) {
      cut = i + 1;
      reached = true;
      break;
    }
  }
  if (!reached) throw RecallUnreachable(n == 0 ? 0.0 : double(tp) / double(gts.size()));
  // Widen to full threshold semantics: take every detection tied with the
  // cut score.
  const double threshold = dets[matches.order[cut - 1]].score;
  while (cut < n && dets[matches.order[cut]].score == threshold) {
    if (matches.det_to_gt[cut] >= 0) ++tp;
    ++cut;
  }

  L2Result out;
  out.score_threshold = threshold;
  out.achieved_recall = double(tp) / double(gts.size());
  const int steps = gts.front().trajectory.step_count();
  out.per_step_m.assign(steps, 0.0);
  int matched = 0;
  for (std::size_t i = 0; i < cut; ++i) {
    const int g = matches.det_to_gt[i];
    if (g < 0) continue;
    const EvalDetection& det = dets[matches.order[i]];
    if (det.trajectory.step_count() != steps)
      throw std::invalid_argument("l2_at_recall: step count mismatch");
    for (int t = 0; t < steps; ++t)
      out.per_step_m[t] += (det.trajectory.steps[t].center - gts[g].trajectory.steps[t].center).norm();
    out.matches.emplace_back(matches.order[i], g);
    ++matched;
  }
  for (double& v : out.per_step_m) v /= double(matched);
  return out;
}

}  // namespace rvm::eval
