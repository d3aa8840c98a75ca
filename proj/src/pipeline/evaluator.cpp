#include "rvm/pipeline/evaluator.hpp"

#include <chrono>
#include <set>

namespace rvm::pipeline {

namespace {

bool inside_roi(const Eigen::Vector2d& center, const EvalProtocol& proto) {
  if (proto.roi_x <= 0.0 || proto.roi_y <= 0.0) return true;
  return std::abs(center.x()) <= 0.5 * proto.roi_x && std::abs(center.y()) <= 0.5 * proto.roi_y;
}

traj::BoxTrajectory track_to_trajectory(const sim::ActorTrack& track) {
  traj::BoxTrajectory traj;
  traj.length = track.length;
  traj.width = track.width;
  traj.steps.resize(track.centers.size());
  for (std::size_t t = 0; t < track.centers.size(); ++t) {
    traj::BoxStep& s = traj.steps[t];
    s.center = track.centers[t];
    s.heading = track.headings[t];
    s.corners = traj::corners_from_params(s.center, s.heading, track.length, track.width);
    s.scale_along = s.scale_cross = 1.0;
  }
  return traj;
}

}  // namespace

std::vector<std::vector<cluster::Detection>> detect_all(const model::Network<float>& net,
                                                        const std::vector<sim::SweepSequence>& frames,
                                                        const DetectorConfig& dc,
                                                        double* seconds_total) {
  std::vector<std::vector<cluster::Detection>> out;
  out.reserve(frames.size());
  const auto start = std::chrono::steady_clock::now();
  for (const sim::SweepSequence& seq : frames) {
    const auto inputs = make_inputs<float>(seq, net.config());
    out.push_back(detect_frame(net, inputs, seq, dc));
  }
  const auto stop = std::chrono::steady_clock::now();
  if (seconds_total) *seconds_total = std::chrono::duration<double>(stop - start).count();
  return out;
}

std::vector<eval::EvalGroundTruth> collect_ground_truth(
    const std::vector<sim::SweepSequence>& frames, const EvalProtocol& proto) {
  std::vector<eval::EvalGroundTruth> gts;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (const sim::ActorTrack& track : frames[f].tracks) {
      if (track.pixel_count < 1) continue;  // invisible to the sensor
      if (!inside_roi(track.centers.front(), proto)) continue;
      eval::EvalGroundTruth gt;
      gt.frame = static_cast<int>(f);
      gt.class_id = track.class_id;
      gt.trajectory = track_to_trajectory(track);
      gts.push_back(std::move(gt));
    }
  }
  return gts;
}

std::vector<eval::EvalDetection> flatten_detections(
    const std::vector<std::vector<cluster::Detection>>& per_frame, const EvalProtocol& proto) {
  std::vector<eval::EvalDetection> dets;
  for (std::size_t f = 0; f < per_frame.size(); ++f) {
    for (const cluster::Detection& d : per_frame[f]) {
      if (!inside_roi(d.trajectory.steps.front().center, proto)) continue;
      eval::EvalDetection det;
      det.frame = static_cast<int>(f);
      det.class_id = d.class_id;
      det.score = d.score;
      det.trajectory = d.trajectory;
      dets.push_back(std::move(det));
    }
  }
  return dets;
}

EvalMetrics evaluate_model(const model::Network<float>& net,
                           const std::vector<sim::SweepSequence>& frames,
                           const EvalProtocol& proto, double horizon_dt, bool oracle_detections) {
  EvalMetrics metrics;
  metrics.step_seconds = horizon_dt;
  metrics.frame_count = static_cast<int>(frames.size());

  std::vector<eval::EvalDetection> dets;
  if (oracle_detections) {
    const auto gts = collect_ground_truth(frames, proto);
    for (const auto& gt : gts) {
      eval::EvalDetection det;
      det.frame = gt.frame;
      det.class_id = gt.class_id;
      det.score = 1.0;
      det.trajectory = gt.trajectory;
      dets.push_back(det);
    }
    metrics.frames_per_second = 0.0;
  } else {
    double seconds = 0.0;
    const auto per_frame = detect_all(net, frames, proto.detector, &seconds);
    dets = flatten_detections(per_frame, proto);
    metrics.frames_per_second = seconds > 0.0 ? double(frames.size()) / seconds : 0.0;
  }
  const auto gts = collect_ground_truth(frames, proto);
  metrics.detection_count = static_cast<int>(dets.size());
  metrics.ground_truth_count = static_cast<int>(gts.size());
  if (gts.empty()) throw std::invalid_argument("evaluate_model: dataset has no ground truths");

  // AP is computed per object class over the class-filtered subsets.
  std::set<int> class_ids;
  for (const auto& gt : gts) class_ids.insert(gt.class_id);
  for (int class_id : class_ids) {
    std::vector<eval::EvalDetection> class_dets;
    std::vector<eval::EvalGroundTruth> class_gts;
    for (const auto& d : dets)
      if (d.class_id == class_id) class_dets.push_back(d);
    for (const auto& g : gts)
      if (g.class_id == class_id) class_gts.push_back(g);
    metrics.ap_per_class[class_id] = eval::average_precision(class_dets, class_gts, proto.ap_iou);
  }
  double ap_sum = 0.0;
  for (const auto& [id, ap] : metrics.ap_per_class) ap_sum += ap;
  metrics.mean_ap = ap_sum / double(metrics.ap_per_class.size());

  const eval::L2Result l2 = eval::l2_at_recall(dets, gts, proto.recall_point, proto.match_iou);
  metrics.l2_per_step_m = l2.per_step_m;
  metrics.l2_threshold = l2.score_threshold;
  metrics.achieved_recall = l2.achieved_recall;

  // Calibration of the matched pairs in the track frame of the predicted
  // heading, per step and per along/cross dimension.
  const int steps = gts.front().trajectory.step_count();
  std::vector<std::array<std::vector<eval::CalibrationSample>, 2>> samples(steps);
  for (const auto& [det_index, gt_index] : l2.matches) {
    const traj::BoxTrajectory& pred = dets[det_index].trajectory;
    const traj::BoxTrajectory& gt = gts[gt_index].trajectory;
    for (int t = 0; t < steps; ++t) {
      const auto pred_track = traj::rotate_to_track_frame(pred.steps[t].corners, pred.steps[t].heading);
      const auto gt_track = traj::rotate_to_track_frame(gt.steps[t].corners, pred.steps[t].heading);
      for (int k = 0; k < 4; ++k) {
        samples[t][0].push_back(
            {pred_track[k].x(), pred.steps[t].scale_along, gt_track[k].x()});
        samples[t][1].push_back(
            {pred_track[k].y(), pred.steps[t].scale_cross, gt_track[k].y()});
      }
    }
  }
  metrics.calibration.resize(steps);
  for (int t = 0; t < steps; ++t) {
    metrics.calibration[t][0] = eval::calibration_curve(samples[t][0]);
    metrics.calibration[t][1] = eval::calibration_curve(samples[t][1]);
  }
  return metrics;
}

}  // namespace rvm::pipeline
