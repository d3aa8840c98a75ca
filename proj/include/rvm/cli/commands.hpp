#pragma once

#include <filesystem>
#include <string>

#include "rvm/cli/experiment.hpp"

namespace rvm::cli {

// Subcommand bodies. All throw ConfigError / NumericError; the binary maps
// them to exit codes 2 / 3.
void cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& dataset_dir,
               const std::filesystem::path& out_dir);

void cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
              const std::filesystem::path& dataset_dir, const std::filesystem::path& out_dir,
              const std::string& split = "all", bool oracle = false);

void cmd_ablate(const ExperimentConfig& cfg, const std::filesystem::path& dataset_dir,
                const std::filesystem::path& out_dir);

void cmd_calibrate(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                   const std::filesystem::path& dataset_dir, const std::filesystem::path& out_dir,
                   const std::string& split = "all");

void cmd_plot(const std::filesystem::path& csv, const std::filesystem::path& svg);

// Deterministic train/validation partition: the trailing fraction of the
// dataset is held out.
struct Split {
  std::vector<sim::SweepSequence> train, val;
};
Split split_dataset(std::vector<sim::SweepSequence> frames, double val_fraction);

// Select frames per the --split flag: "all", "train" or "val".
std::vector<sim::SweepSequence> select_split(std::vector<sim::SweepSequence> frames,
                                             double val_fraction, const std::string& split);

}  // namespace rvm::cli
