#include <CLI11.hpp>
#include <iostream>

#include "rvm/cli/commands.hpp"

namespace {

rvm::cli::ExperimentConfig load_config(const std::string& path, std::int64_t seed_override) {
  rvm::cli::ExperimentConfig cfg = rvm::cli::load_experiment(path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"range-view LiDAR detection and motion forecasting toolkit"};
  app.require_subcommand(1);

  std::string config_path, dataset_dir, out_dir, checkpoint, split = "all", csv_in, svg_out;
  std::int64_t seed_override = -1;
  bool oracle = false;

  auto add_common = [&](CLI::App* cmd, bool needs_out = true) {
    cmd->add_option("--config", config_path, "experiment config JSON")->required();
    cmd->add_option("--seed", seed_override, "override the config seed");
    if (needs_out) cmd->add_option("--out", out_dir, "output directory")->required();
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(simulate);

  CLI::App* train = app.add_subcommand("train", "train a model on a dataset");
  add_common(train);
  train->add_option("--dataset", dataset_dir, "dataset directory")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option("--dataset", dataset_dir, "dataset directory")->required();
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint JSON");
  eval_cmd->add_option("--split", split, "all | train | val");
  eval_cmd->add_flag("--oracle", oracle, "replay ground truth as detections");

  CLI::App* ablate = app.add_subcommand("ablate", "train and compare ablation variants");
  add_common(ablate);
  ablate->add_option("--dataset", dataset_dir, "dataset directory")->required();

  CLI::App* calibrate = app.add_subcommand("calibrate", "emit calibration curves for a checkpoint");
  add_common(calibrate);
  calibrate->add_option("--dataset", dataset_dir, "dataset directory")->required();
  calibrate->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
  calibrate->add_option("--split", split, "all | train | val");

  CLI::App* plot = app.add_subcommand("plot", "render a toolkit CSV as an SVG plot");
  plot->add_option("--input", csv_in, "input CSV")->required();
  plot->add_option("--out", svg_out, "output SVG")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      rvm::cli::cmd_simulate(load_config(config_path, seed_override), out_dir);
    } else if (train->parsed()) {
      rvm::cli::cmd_train(load_config(config_path, seed_override), dataset_dir, out_dir);
    } else if (eval_cmd->parsed()) {
      if (!oracle && checkpoint.empty())
        throw rvm::ConfigError("eval requires --checkpoint unless --oracle is set");
      rvm::cli::cmd_eval(load_config(config_path, seed_override), checkpoint, dataset_dir, out_dir,
                         split, oracle);
    } else if (ablate->parsed()) {
      rvm::cli::cmd_ablate(load_config(config_path, seed_override), dataset_dir, out_dir);
    } else if (calibrate->parsed()) {
      rvm::cli::cmd_calibrate(load_config(config_path, seed_override), checkpoint, dataset_dir,
                              out_dir, split);
    } else if (plot->parsed()) {
      rvm::cli::cmd_plot(csv_in, svg_out);
    }
  } catch (const rvm::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const rvm::eval::RecallUnreachable& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const rvm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
