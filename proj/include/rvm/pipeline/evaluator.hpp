#pragma once

#include <map>
#include <vector>

#include "rvm/eval/calibration.hpp"
#include "rvm/eval/metrics.hpp"
#include "rvm/pipeline/detector.hpp"

namespace rvm::pipeline {

struct EvalProtocol {
  double ap_iou = 0.7;
  double match_iou = 0.5;
  double recall_point = 0.8;
  std::vector<double> l2_times_s = {0.0, 1.0, 3.0};
  double roi_x = 144.0;  // meters, RoI extent along x; <= 0 disables
  double roi_y = 80.0;
  DetectorConfig detector;
};

struct EvalMetrics {
  std::map<int, double> ap_per_class;
  double mean_ap = 0.0;
  std::vector<double> l2_per_step_m;
  double l2_threshold = 0.0;
  double achieved_recall = 0.0;
  double step_seconds = 0.5;
  double frames_per_second = 0.0;
  int frame_count = 0;
  int detection_count = 0;
  int ground_truth_count = 0;
  // Calibration per trajectory step: [t][0] along-track, [t][1] cross-track.
  std::vector<std::array<eval::CalibrationCurve, 2>> calibration;
};

// Detections for every frame; `oracle` replays the ground truth as perfect
// detections instead of running the network.
std::vector<std::vector<cluster::Detection>> detect_all(const model::Network<float>& net,
                                                        const std::vector<sim::SweepSequence>& frames,
                                                        const DetectorConfig& dc,
                                                        double* seconds_total = nullptr);

std::vector<eval::EvalGroundTruth> collect_ground_truth(
    const std::vector<sim::SweepSequence>& frames, const EvalProtocol& proto);

std::vector<eval::EvalDetection> flatten_detections(
    const std::vector<std::vector<cluster::Detection>>& per_frame, const EvalProtocol& proto);

// Full protocol: AP per class, center L2 at the fixed recall point, and
// calibration of the matched pairs. Throws eval::RecallUnreachable when the
// recall point cannot be met.
EvalMetrics evaluate_model(const model::Network<float>& net,
                           const std::vector<sim::SweepSequence>& frames,
                           const EvalProtocol& proto, double horizon_dt,
                           bool oracle_detections = false);

}  // namespace rvm::pipeline
