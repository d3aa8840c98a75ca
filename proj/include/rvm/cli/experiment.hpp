#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rvm/core/errors.hpp"
#include "rvm/core/io.hpp"
#include "rvm/loss/curriculum.hpp"
#include "rvm/model/config.hpp"
#include "rvm/pipeline/evaluator.hpp"
#include "rvm/pipeline/trainer.hpp"
#include "rvm/sim/dataset.hpp"

namespace rvm::cli {

struct AblationConfig {
  std::vector<std::string> variants = {"proposed",      "early_fusion",   "no_transformer",
                                       "global_ego",    "no_uncertainty", "weight_curriculum"};
  int seeds = 3;
  int iterations = 0;  // 0: reuse train.iterations
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  double val_fraction = 0.1;
  sim::SimConfig simulator;
  model::ModelConfig model;
  loss::LossConfig loss;
  pipeline::TrainConfig train;
  pipeline::EvalProtocol eval;
  AblationConfig ablation;
};

// A named training configuration: the architecture variant plus the loss
// schedule it trains under.
struct TrainingVariant {
  model::Variant model_variant = model::Variant::kProposed;
  loss::CurriculumMode curriculum = loss::CurriculumMode::kUncertainty;
  bool l1_regression = false;
};

TrainingVariant training_variant_from_name(const std::string& name);

ExperimentConfig experiment_from_json(const json& j);
json experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment(const std::filesystem::path& path);

}  // namespace rvm::cli
