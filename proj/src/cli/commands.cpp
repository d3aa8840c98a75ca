#include "rvm/cli/commands.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "rvm/cli/plot.hpp"
#include "rvm/model/checkpoint.hpp"

namespace rvm::cli {

namespace {

int time_to_step(double seconds, double step_seconds, int horizon) {
  const double raw = seconds / step_seconds;
  const int idx = static_cast<int>(std::lround(raw));
  if (std::abs(raw - idx) > 1e-9 || idx < 0 || idx > horizon)
    throw ConfigError("requested L2 time " + std::to_string(seconds) +
                      "s is not on the prediction grid");
  return idx;
}

json metrics_to_json(const pipeline::EvalMetrics& m, const ExperimentConfig& cfg, int horizon) {
  json per_class = json::object();
  for (const auto& [id, ap] : m.ap_per_class) per_class[std::to_string(id)] = ap;
  json at_times = json::object();
  for (double t : cfg.eval.l2_times_s) {
    const int idx = time_to_step(t, m.step_seconds, horizon);
    at_times[std::to_string(t)] = m.l2_per_step_m[idx] * 100.0;
  }
  std::vector<double> per_step_cm;
  for (double v : m.l2_per_step_m) per_step_cm.push_back(v * 100.0);
  return json{{"schema", "rvm.metrics.v1"},
              {"frames", m.frame_count},
              {"detections", m.detection_count},
              {"ground_truths", m.ground_truth_count},
              {"ap", {{"iou", cfg.eval.ap_iou}, {"per_class", per_class}, {"mean", m.mean_ap}}},
              {"l2",
               {{"recall_point", cfg.eval.recall_point},
                {"match_iou", cfg.eval.match_iou},
                {"achieved_recall", m.achieved_recall},
                {"score_threshold", m.l2_threshold},
                {"step_seconds", m.step_seconds},
                {"per_step_cm", per_step_cm},
                {"at_times_cm", at_times}}},
              {"throughput_frames_per_second", m.frames_per_second}};
}

void write_metrics_csv(const std::filesystem::path& path, const pipeline::EvalMetrics& m,
                       const ExperimentConfig& cfg, int horizon) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "metric,value\n" << std::setprecision(10);
  out << "ap_mean," << m.mean_ap << "\n";
  for (const auto& [id, ap] : m.ap_per_class) out << "ap_class_" << id << "," << ap << "\n";
  for (double t : cfg.eval.l2_times_s) {
    const int idx = time_to_step(t, m.step_seconds, horizon);
    out << "l2_" << t << "s_cm," << m.l2_per_step_m[idx] * 100.0 << "\n";
  }
  out << "achieved_recall," << m.achieved_recall << "\n";
  out << "score_threshold," << m.l2_threshold << "\n";
  out << "frames_per_second," << m.frames_per_second << "\n";
}

void write_calibration_csv(const std::filesystem::path& path, const pipeline::EvalMetrics& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "t_seconds,dimension,expected,observed\n" << std::setprecision(10);
  for (std::size_t t = 0; t < m.calibration.size(); ++t) {
    for (int dim = 0; dim < 2; ++dim) {
      const eval::CalibrationCurve& curve = m.calibration[t][dim];
      for (std::size_t i = 0; i < curve.expected.size(); ++i)
        out << double(t) * m.step_seconds << "," << (dim == 0 ? "along" : "cross") << ","
            << curve.expected[i] << "," << curve.observed[i] << "\n";
    }
  }
}

json trajectory_to_json(const traj::BoxTrajectory& traj, double step_seconds) {
  json steps = json::array();
  for (int t = 0; t < traj.step_count(); ++t) {
    const traj::BoxStep& s = traj.steps[t];
    json corners = json::array();
    for (const auto& c : s.corners) corners.push_back({c.x(), c.y()});
    steps.push_back({{"t", t * step_seconds},
                     {"center", {s.center.x(), s.center.y()}},
                     {"heading", s.heading},
                     {"corners", corners},
                     {"b_along", s.scale_along},
                     {"b_cross", s.scale_cross}});
  }
  return steps;
}

void write_detections_json(const std::filesystem::path& path,
                           const std::vector<std::vector<cluster::Detection>>& per_frame,
                           double step_seconds) {
  json frames = json::array();
  for (std::size_t f = 0; f < per_frame.size(); ++f) {
    json dets = json::array();
    for (const cluster::Detection& d : per_frame[f]) {
      dets.push_back({{"score", d.score},
                      {"class_id", d.class_id},
                      {"pixel_count", d.pixel_count},
                      {"length", d.trajectory.length},
                      {"width", d.trajectory.width},
                      {"trajectory", trajectory_to_json(d.trajectory, step_seconds)}});
    }
    frames.push_back({{"frame", f}, {"detections", dets}});
  }
  write_json_file(path, json{{"schema", "rvm.detections.v1"}, {"frames", frames}});
}

std::vector<sim::SweepSequence> load_dataset_checked(const ExperimentConfig& cfg,
                                                     const std::filesystem::path& dataset_dir) {
  sim::SimConfig disk_cfg;
  std::vector<sim::SweepSequence> frames;
  try {
    frames = sim::load_dataset(dataset_dir, &disk_cfg);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot load dataset: ") + e.what());
  }
  if (disk_cfg.sweep_count != cfg.simulator.sweep_count ||
      disk_cfg.horizon != cfg.simulator.horizon ||
      disk_cfg.class_count != cfg.simulator.class_count ||
      disk_cfg.lidar.map_channels != cfg.simulator.lidar.map_channels ||
      disk_cfg.lidar.raster.width != cfg.simulator.lidar.raster.width ||
      disk_cfg.lidar.raster.height != cfg.simulator.lidar.raster.height)
    throw ConfigError("dataset at " + dataset_dir.string() +
                      " does not match the experiment's simulator configuration");
  return frames;
}

struct AblationRow {
  std::string variant;
  std::string seed;  // seed value or "mean"
  double ap = 0.0;
  std::vector<double> l2_cm;  // per requested time; +inf when unreachable
  std::string note;
};

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows,
                        const std::vector<double>& times) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "variant,seed,ap";
  for (double t : times) out << ",l2_" << t << "s_cm";
  out << ",note\n" << std::setprecision(8);
  for (const AblationRow& row : rows) {
    out << row.variant << "," << row.seed << "," << row.ap;
    for (double v : row.l2_cm) {
      out << ",";
      if (std::isfinite(v))
        out << v;
      else
        out << "inf";
    }
    out << "," << row.note << "\n";
  }
}

}  // namespace

Split split_dataset(std::vector<sim::SweepSequence> frames, double val_fraction) {
  Split split;
  const int n = static_cast<int>(frames.size());
  const int val_count = static_cast<int>(std::lround(val_fraction * n));
  const int train_count = n - val_count;
  for (int i = 0; i < n; ++i) {
    if (i < train_count)
      split.train.push_back(std::move(frames[i]));
    else
      split.val.push_back(std::move(frames[i]));
  }
  return split;
}

std::vector<sim::SweepSequence> select_split(std::vector<sim::SweepSequence> frames,
                                             double val_fraction, const std::string& split) {
  if (split == "all") return frames;
  Split parts = split_dataset(std::move(frames), val_fraction);
  if (split == "train") return std::move(parts.train);
  if (split == "val") return std::move(parts.val);
  throw ConfigError("unknown split '" + split + "' (expected all, train or val)");
}

void cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const auto dataset = sim::generate_dataset(cfg.simulator, cfg.seed);
  try {
    sim::save_dataset(out_dir, cfg.simulator, dataset, cfg.seed);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot write dataset: ") + e.what());
  }
  std::size_t rasters = 0;
  for (const auto& seq : dataset) rasters += seq.sweeps.size();
  std::cout << "wrote " << dataset.size() << " scenes (" << rasters << " rasters) to " << out_dir
            << "\n";
}

void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& dataset_dir,
               const std::filesystem::path& out_dir) {
  auto frames = load_dataset_checked(cfg, dataset_dir);
  Split split = split_dataset(std::move(frames), cfg.val_fraction);
  if (split.train.empty() && cfg.train.iterations > 0)
    throw ConfigError("training split is empty");
  std::filesystem::create_directories(out_dir);

  model::Network<float> net(cfg.model);
  const int print_every = std::max(1, cfg.train.iterations / 10);
  pipeline::train_model(net, split.train, cfg.loss, cfg.train, cfg.seed, out_dir,
                        [&](const pipeline::LossRow& row) {
                          if (row.iteration % print_every == 0)
                            std::cout << "iter " << row.iteration << " cls " << std::setprecision(5)
                                      << row.loss_cls << " reg " << row.loss_reg << " alpha "
                                      << row.alpha << "\n";
                        });
  std::cout << "final checkpoint: " << (out_dir / "checkpoint.json") << "\n";
}

void cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
              const std::filesystem::path& dataset_dir, const std::filesystem::path& out_dir,
              const std::string& split, bool oracle) {
  auto frames = select_split(load_dataset_checked(cfg, dataset_dir), cfg.val_fraction, split);
  if (frames.empty()) throw ConfigError("selected split is empty");

  model::Network<float> net(cfg.model);
  if (!oracle) {
    try {
      net = model::load_checkpoint<float>(checkpoint);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("cannot load checkpoint: ") + e.what());
    }
  }
  std::filesystem::create_directories(out_dir);

  pipeline::EvalMetrics metrics;
  try {
    metrics = pipeline::evaluate_model(net, frames, cfg.eval, cfg.simulator.horizon_dt, oracle);
  } catch (const eval::RecallUnreachable& e) {
    throw NumericError(e.what());
  }

  const int horizon = cfg.simulator.horizon;
  write_json_file(out_dir / "metrics.json", metrics_to_json(metrics, cfg, horizon));
  write_metrics_csv(out_dir / "metrics.csv", metrics, cfg, horizon);
  write_calibration_csv(out_dir / "calibration.csv", metrics);
  if (!oracle) {
    const auto per_frame = pipeline::detect_all(net, frames, cfg.eval.detector);
    write_detections_json(out_dir / "detections.json", per_frame, cfg.simulator.horizon_dt);
  }
  std::cout << "mean AP@" << cfg.eval.ap_iou << ": " << metrics.mean_ap << "\n";
  for (double t : cfg.eval.l2_times_s)
    std::cout << "L2@" << t << "s: "
              << metrics.l2_per_step_m[time_to_step(t, metrics.step_seconds, horizon)] * 100.0
              << " cm\n";
  std::cout << "throughput: " << metrics.frames_per_second << " frames/s\n";
}

void cmd_ablate(const ExperimentConfig& cfg, const std::filesystem::path& dataset_dir,
                const std::filesystem::path& out_dir) {
  auto frames = load_dataset_checked(cfg, dataset_dir);
  Split split = split_dataset(std::move(frames), cfg.val_fraction);
  if (split.train.empty() || split.val.empty())
    throw ConfigError("ablation needs non-empty train and validation splits");
  std::filesystem::create_directories(out_dir);

  struct Job {
    std::string variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const std::string& variant : cfg.ablation.variants)
    for (int s = 0; s < cfg.ablation.seeds; ++s)
      jobs.push_back({variant, cfg.seed + static_cast<std::uint64_t>(s)});

  pipeline::TrainConfig train_cfg = cfg.train;
  if (cfg.ablation.iterations > 0) train_cfg.iterations = cfg.ablation.iterations;

  std::vector<AblationRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size() || failed.load()) break;
      const Job& job = jobs[i];
      try {
        const TrainingVariant tv = training_variant_from_name(job.variant);
        model::ModelConfig mc = cfg.model;
        mc.variant = tv.model_variant;
        loss::LossConfig lc = cfg.loss;
        lc.curriculum = tv.curriculum;
        pipeline::TrainConfig tc = train_cfg;
        tc.l1_regression = tv.l1_regression;

        model::Network<float> net(mc);
        pipeline::train_model(net, split.train, lc, tc, job.seed, {});

        AblationRow row;
        row.variant = job.variant;
        row.seed = std::to_string(job.seed);
        try {
          const auto metrics =
              pipeline::evaluate_model(net, split.val, cfg.eval, cfg.simulator.horizon_dt);
          row.ap = metrics.mean_ap;
          for (double t : cfg.eval.l2_times_s)
            row.l2_cm.push_back(
                metrics.l2_per_step_m[time_to_step(t, metrics.step_seconds, cfg.model.horizon)] *
                100.0);
        } catch (const eval::RecallUnreachable&) {
          // The variant never reached the recall point; recorded as inf.
          row.l2_cm.assign(cfg.eval.l2_times_s.size(),
                           std::numeric_limits<double>::infinity());
        }
        rows[i] = std::move(row);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        failure = e.what();
      }
    }
  };

  const unsigned workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(), 2u));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failed.load()) throw NumericError("ablation run failed: " + failure);

  // Per-variant means plus the qualitative ordering of the proposed variant
  // against every alternative at the latest requested time.
  std::vector<AblationRow> report = rows;
  const std::size_t latest = cfg.eval.l2_times_s.size() - 1;
  std::map<std::string, AblationRow> means;
  for (const std::string& variant : cfg.ablation.variants) {
    AblationRow mean;
    mean.variant = variant;
    mean.seed = "mean";
    mean.l2_cm.assign(cfg.eval.l2_times_s.size(), 0.0);
    int count = 0;
    for (const AblationRow& row : rows) {
      if (row.variant != variant) continue;
      mean.ap += row.ap;
      for (std::size_t t = 0; t < row.l2_cm.size(); ++t) mean.l2_cm[t] += row.l2_cm[t];
      ++count;
    }
    mean.ap /= count;
    for (double& v : mean.l2_cm) v /= count;
    means[variant] = mean;
  }
  const bool have_proposed = means.count("proposed") > 0;
  for (const std::string& variant : cfg.ablation.variants) {
    AblationRow mean = means[variant];
    if (have_proposed && variant != "proposed") {
      const double proposed = means["proposed"].l2_cm[latest];
      const double own = mean.l2_cm[latest];
      mean.note = proposed <= own ? "ok" : "ordering-violation:proposed-worse";
    }
    report.push_back(std::move(mean));
  }

  write_ablation_csv(out_dir / "ablation.csv", report, cfg.eval.l2_times_s);
  for (const AblationRow& row : report)
    if (row.seed == "mean")
      std::cout << row.variant << ": AP " << std::setprecision(4) << row.ap << ", L2@"
                << cfg.eval.l2_times_s[latest] << "s " << row.l2_cm[latest] << " cm"
                << (row.note.empty() ? "" : " [" + row.note + "]") << "\n";
}

void cmd_calibrate(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                   const std::filesystem::path& dataset_dir, const std::filesystem::path& out_dir,
                   const std::string& split) {
  auto frames = select_split(load_dataset_checked(cfg, dataset_dir), cfg.val_fraction, split);
  if (frames.empty()) throw ConfigError("selected split is empty");
  model::Network<float> net(cfg.model);
  try {
    net = model::load_checkpoint<float>(checkpoint);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot load checkpoint: ") + e.what());
  }
  std::filesystem::create_directories(out_dir);
  pipeline::EvalMetrics metrics;
  try {
    metrics = pipeline::evaluate_model(net, frames, cfg.eval, cfg.simulator.horizon_dt);
  } catch (const eval::RecallUnreachable& e) {
    throw NumericError(e.what());
  }
  write_calibration_csv(out_dir / "calibration.csv", metrics);
  plot_csv(out_dir / "calibration.csv", out_dir / "calibration.svg");
  std::cout << "calibration written to " << (out_dir / "calibration.csv") << "\n";
}

void cmd_plot(const std::filesystem::path& csv, const std::filesystem::path& svg) {
  plot_csv(csv, svg);
  std::cout << "wrote " << svg << "\n";
}

}  // namespace rvm::cli
