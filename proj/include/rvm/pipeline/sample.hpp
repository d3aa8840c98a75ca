#pragma once

#include <vector>

#include "rvm/loss/regression.hpp"
#include "rvm/model/ego.hpp"
#include "rvm/model/network.hpp"
#include "rvm/sim/dataset.hpp"
#include "rvm/traj/decode.hpp"

namespace rvm::pipeline {

// Re-render a previous sweep's returns into the current sweep's raster
// (used by the early-fusion variant instead of feature warping).
geom::RangeImage reproject_range_image(const geom::RangeImage& prev, const geom::Pose& target_pose,
                                       const geom::RasterConfig& cfg);

// Raster channels to network input: the range channel is scaled, everything
// else passes through.
template <typename Scalar>
net::Tensor<Scalar> make_input_tensor(const geom::RangeImage& img, double range_scale) {
  const int h = img.config.height, w = img.config.width, c = img.channel_count();
  net::Tensor<Scalar> out(h, w, c);
  for (std::size_t i = 0; i < out.size(); i += c) {
    out.data[i] = Scalar(img.data[i] * range_scale);
    for (int ch = 1; ch < c; ++ch) out.data[i + ch] = Scalar(img.data[i + ch]);
  }
  return out;
}

// Assemble the variant-appropriate network inputs for one frame.
template <typename Scalar>
typename model::Network<Scalar>::Inputs make_inputs(const sim::SweepSequence& seq,
                                                    const model::ModelConfig& cfg) {
  typename model::Network<Scalar>::Inputs in;
  if (static_cast<int>(seq.sweeps.size()) != cfg.sweep_count)
    throw std::invalid_argument("make_inputs: sweep count mismatch");
  const geom::RangeImage& current = seq.current();
  if (current.channel_count() != cfg.input_channels)
    throw std::invalid_argument("make_inputs: raster channels do not match the model");

  if (cfg.variant == model::Variant::kEarlyFusion) {
    std::vector<net::Tensor<Scalar>> rendered;
    rendered.reserve(cfg.sweep_count);
    for (int s = 0; s < cfg.sweep_count; ++s) {
      const geom::RangeImage& sweep = seq.sweeps[s];
      if (s + 1 == cfg.sweep_count) {
        rendered.push_back(make_input_tensor<Scalar>(sweep, cfg.range_scale));
      } else {
        rendered.push_back(make_input_tensor<Scalar>(
            reproject_range_image(sweep, current.pose, current.config), cfg.range_scale));
      }
    }
    std::vector<const net::Tensor<Scalar>*> parts;
    for (const auto& t : rendered) parts.push_back(&t);
    in.sweeps.push_back(net::concat_channels(parts));
    return in;
  }

  const bool rotate = cfg.variant != model::Variant::kGlobalEgo;
  for (int s = 0; s < cfg.sweep_count; ++s) {
    const geom::RangeImage& sweep = seq.sweeps[s];
    in.sweeps.push_back(make_input_tensor<Scalar>(sweep, cfg.range_scale));
    const Eigen::Vector3d delta = model::ego_motion_delta(current.pose, sweep.pose);
    in.ego.push_back(model::make_ego_feature<Scalar>(delta, current.config, rotate));
    if (s + 1 < cfg.sweep_count)
      in.warps.push_back(geom::compute_warp_mapping(sweep, current.pose, current.config));
  }
  return in;
}

// Supervision for one frame, derived from the labels of the current sweep.
struct PixelTarget {
  int pixel = 0;  // row-major index into the current raster
  traj::BevPoint point;
  int target_index = 0;  // into FrameTargets::targets
  double weight = 1.0;   // 1 / (pixels on the object)
};

struct FrameTargets {
  std::vector<int> labels;  // per-pixel class ids, background = 0
  std::vector<loss::TrajectoryTarget> targets;
  std::vector<PixelTarget> pixels;
  int object_count = 0;
};

FrameTargets make_frame_targets(const sim::SweepSequence& seq);

}  // namespace rvm::pipeline
