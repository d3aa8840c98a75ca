#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "rvm/loss/curriculum.hpp"
#include "rvm/model/network.hpp"
#include "rvm/pipeline/sample.hpp"

namespace rvm::pipeline {

struct TrainConfig {
  int iterations = 5000;
  double lr = 1e-3;
  int checkpoint_every = 1000;
  int log_every = 10;
  bool l1_regression = false;  // train plain L1 on the corner means; scales unused
  double grad_clip = 5.0;      // global gradient-norm ceiling; <= 0 disables

  void validate() const {
    if (iterations < 0) throw std::invalid_argument("TrainConfig: iterations must be >= 0");
    if (lr <= 0) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (checkpoint_every < 1 || log_every < 1)
      throw std::invalid_argument("TrainConfig: intervals must be >= 1");
  }
};

struct LossRow {
  int iteration = 0;
  double loss_cls = 0.0;
  double loss_reg = 0.0;
  double alpha = 0.0;
  std::vector<double> scale_gt;  // per-step ground-truth scale trace
};

struct TrainResult {
  int iterations = 0;
  std::vector<LossRow> curve;
};

// Deterministic single-threaded training loop over precomputed frame inputs.
// When `out_dir` is non-empty it receives interval checkpoints, the final
// checkpoint and the loss CSV.
TrainResult train_model(model::Network<float>& net,
                        const std::vector<sim::SweepSequence>& train_set,
                        const loss::LossConfig& loss_cfg, const TrainConfig& train_cfg,
                        std::uint64_t seed, const std::filesystem::path& out_dir,
                        const std::function<void(const LossRow&)>& on_log = {});

void write_loss_csv(const std::filesystem::path& path, const TrainResult& result, int horizon);

}  // namespace rvm::pipeline
