#pragma once

#include "rvm/cluster/mean_shift.hpp"
#include "rvm/model/network.hpp"
#include "rvm/pipeline/sample.hpp"

namespace rvm::pipeline {

struct DetectorConfig {
  double score_threshold = 0.3;
  double bandwidth = 0.5;  // meters
  double nms_iou = 0.1;
};

// Per-pixel predictions of the current sweep, decoded from the network
// output raster.
std::vector<cluster::ClusterPoint> decode_pixel_predictions(const net::Tensor<float>& out,
                                                            const sim::SweepSequence& seq,
                                                            const model::ModelConfig& cfg,
                                                            double score_threshold);

// Full inference path: forward, decode, cluster, suppress.
std::vector<cluster::Detection> detect_frame(const model::Network<float>& net,
                                             const model::Network<float>::Inputs& inputs,
                                             const sim::SweepSequence& seq,
                                             const DetectorConfig& dc);

}  // namespace rvm::pipeline
