#include "rvm/pipeline/detector.hpp"

#include <cmath>

namespace rvm::pipeline {

std::vector<cluster::ClusterPoint> decode_pixel_predictions(const net::Tensor<float>& out,
                                                            const sim::SweepSequence& seq,
                                                            const model::ModelConfig& cfg,
                                                            double score_threshold) {
  const geom::RangeImage& current = seq.current();
  const int classes = cfg.total_classes();
  const int out_channels = cfg.output_channels();
  const int reg_offset = cfg.regression_offset();
  std::vector<cluster::ClusterPoint> points;

  std::vector<double> probs(classes);
  for (int row = 0; row < current.config.height; ++row) {
    for (int col = 0; col < current.config.width; ++col) {
      if (!current.valid(row, col)) continue;
      const int pixel = row * current.config.width + col;
      const float* ch = &out.data[std::size_t(pixel) * out_channels];

      double zmax = ch[0];
      for (int c = 1; c < classes; ++c) zmax = std::max(zmax, double(ch[c]));
      double denom = 0.0;
      for (int c = 0; c < classes; ++c) {
        probs[c] = std::exp(double(ch[c]) - zmax);
        denom += probs[c];
      }
      for (int c = 0; c < classes; ++c) probs[c] /= denom;
      int best_class = 1;
      for (int c = 2; c < classes; ++c)
        if (probs[c] > probs[best_class]) best_class = c;
      if (probs[best_class] < score_threshold) continue;

      const Eigen::Vector3d p3 = current.point(row, col);
      traj::BevPoint point{p3.x(), p3.y(), current.config.col_to_azimuth(col)};

      traj::PerPointPrediction pred;
      pred.class_probs = Eigen::VectorXd(classes);
      for (int c = 0; c < classes; ++c) pred.class_probs[c] = probs[c];
      const float* reg = ch + reg_offset;
      pred.length = reg[loss::reg::kLength];
      pred.width = reg[loss::reg::kWidth];
      for (int t = 0; t <= cfg.horizon; ++t) {
        const float* step = reg + loss::reg::base(t);
        pred.displacement.emplace_back(step[0], step[1]);
        pred.orientation.emplace_back(step[2], step[3]);
        pred.log_scale.emplace_back(step[4], step[5]);
      }
      if (pred.orientation[0].x() == 0.0 && pred.orientation[0].y() == 0.0) continue;

      cluster::ClusterPoint cp;
      cp.class_id = best_class;
      cp.class_prob = probs[best_class];
      cp.trajectory = traj::decode_trajectory(point, pred);
      cp.center = cp.trajectory.steps.front().center;
      points.push_back(std::move(cp));
    }
  }
  return points;
}

std::vector<cluster::Detection> detect_frame(const model::Network<float>& net,
                                             const model::Network<float>::Inputs& inputs,
                                             const sim::SweepSequence& seq,
                                             const DetectorConfig& dc) {
  const net::Tensor<float> out = net.forward(inputs);
  const auto points = decode_pixel_predictions(out, seq, net.config(), dc.score_threshold);
  auto detections = cluster::mean_shift_cluster(points, dc.bandwidth, dc.score_threshold);
  return cluster::suppress_overlaps(std::move(detections), dc.nms_iou);
}

}  // namespace rvm::pipeline
