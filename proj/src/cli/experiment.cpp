#include "rvm/cli/experiment.hpp"

#include "rvm/model/checkpoint.hpp"

namespace rvm::cli {

TrainingVariant training_variant_from_name(const std::string& name) {
  if (name == "proposed") return {model::Variant::kProposed, loss::CurriculumMode::kUncertainty, false};
  if (name == "early_fusion")
    return {model::Variant::kEarlyFusion, loss::CurriculumMode::kUncertainty, false};
  if (name == "no_transformer")
    return {model::Variant::kNoTransformer, loss::CurriculumMode::kUncertainty, false};
  if (name == "global_ego")
    return {model::Variant::kGlobalEgo, loss::CurriculumMode::kUncertainty, false};
  if (name == "no_uncertainty") return {model::Variant::kProposed, loss::CurriculumMode::kNone, true};
  if (name == "no_curriculum") return {model::Variant::kProposed, loss::CurriculumMode::kNone, false};
  if (name == "weight_curriculum")
    return {model::Variant::kProposed, loss::CurriculumMode::kWeight, false};
  throw ConfigError("unknown ablation variant: " + name);
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("schema") && j.at("schema").get<std::string>() != "rvm.experiment.v1")
      throw ConfigError("unexpected experiment schema");
    if (!j.contains("seed")) throw ConfigError("experiment config requires a seed");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
      throw ConfigError("val_fraction must be in [0, 1)");
    if (j.contains("simulator")) cfg.simulator = sim::sim_config_from_json(j.at("simulator"));
    if (j.contains("model")) cfg.model = model::model_config_from_json(j.at("model"));

    // The model consumes what the simulator emits; mirror the shared fields.
    cfg.model.sweep_count = cfg.simulator.sweep_count;
    cfg.model.horizon = cfg.simulator.horizon;
    cfg.model.object_classes = cfg.simulator.class_count;
    cfg.model.input_channels = cfg.simulator.lidar.map_channels ? 5 : 3;
    cfg.model.validate();

    if (j.contains("loss")) {
      const json& l = j.at("loss");
      cfg.loss.gamma = l.value("gamma", cfg.loss.gamma);
      cfg.loss.lambda = l.value("lambda", cfg.loss.lambda);
      cfg.loss.eta = l.value("eta", cfg.loss.eta);
      cfg.loss.epsilon = l.value("epsilon", cfg.loss.epsilon);
      cfg.loss.beta = l.value("beta", cfg.loss.beta);
      cfg.loss.curriculum =
          loss::curriculum_mode_from_string(l.value("curriculum", std::string("uncertainty")));
      cfg.loss.validate();
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      cfg.train.iterations = t.value("iterations", cfg.train.iterations);
      cfg.train.lr = t.value("lr", cfg.train.lr);
      cfg.train.checkpoint_every = t.value("checkpoint_every", cfg.train.checkpoint_every);
      cfg.train.log_every = t.value("log_every", cfg.train.log_every);
      cfg.train.l1_regression = t.value("l1_regression", cfg.train.l1_regression);
      cfg.train.grad_clip = t.value("grad_clip", cfg.train.grad_clip);
      cfg.train.validate();
    }
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      cfg.eval.ap_iou = e.value("ap_iou", cfg.eval.ap_iou);
      cfg.eval.match_iou = e.value("match_iou", cfg.eval.match_iou);
      cfg.eval.recall_point = e.value("recall_point", cfg.eval.recall_point);
      if (e.contains("l2_times_s")) cfg.eval.l2_times_s = e.at("l2_times_s").get<std::vector<double>>();
      if (e.contains("roi")) {
        if (e.at("roi").is_null()) {
          cfg.eval.roi_x = cfg.eval.roi_y = 0.0;
        } else {
          const auto roi = e.at("roi").get<std::vector<double>>();
          if (roi.size() != 2) throw ConfigError("eval.roi must be [x_extent, y_extent] or null");
          cfg.eval.roi_x = roi[0];
          cfg.eval.roi_y = roi[1];
        }
      }
      cfg.eval.detector.score_threshold = e.value("score_threshold", cfg.eval.detector.score_threshold);
      cfg.eval.detector.bandwidth = e.value("bandwidth", cfg.eval.detector.bandwidth);
      cfg.eval.detector.nms_iou = e.value("nms_iou", cfg.eval.detector.nms_iou);
    }
    if (j.contains("ablation")) {
      const json& a = j.at("ablation");
      if (a.contains("variants")) cfg.ablation.variants = a.at("variants").get<std::vector<std::string>>();
      cfg.ablation.seeds = a.value("seeds", cfg.ablation.seeds);
      cfg.ablation.iterations = a.value("iterations", cfg.ablation.iterations);
      if (cfg.ablation.seeds < 1) throw ConfigError("ablation.seeds must be >= 1");
      for (const std::string& v : cfg.ablation.variants) training_variant_from_name(v);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
  return cfg;
}

json experiment_to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema"] = "rvm.experiment.v1";
  j["seed"] = cfg.seed;
  j["val_fraction"] = cfg.val_fraction;
  j["simulator"] = sim::sim_config_to_json(cfg.simulator);
  j["model"] = model::model_config_to_json(cfg.model);
  j["loss"] = {{"gamma", cfg.loss.gamma},       {"lambda", cfg.loss.lambda},
               {"eta", cfg.loss.eta},           {"epsilon", cfg.loss.epsilon},
               {"beta", cfg.loss.beta},         {"curriculum", to_string(cfg.loss.curriculum)}};
  j["train"] = {{"iterations", cfg.train.iterations},
                {"lr", cfg.train.lr},
                {"checkpoint_every", cfg.train.checkpoint_every},
                {"log_every", cfg.train.log_every},
                {"l1_regression", cfg.train.l1_regression},
                {"grad_clip", cfg.train.grad_clip}};
  j["eval"] = {{"ap_iou", cfg.eval.ap_iou},
               {"match_iou", cfg.eval.match_iou},
               {"recall_point", cfg.eval.recall_point},
               {"l2_times_s", cfg.eval.l2_times_s},
               {"roi", {cfg.eval.roi_x, cfg.eval.roi_y}},
               {"score_threshold", cfg.eval.detector.score_threshold},
               {"bandwidth", cfg.eval.detector.bandwidth},
               {"nms_iou", cfg.eval.detector.nms_iou}};
  j["ablation"] = {{"variants", cfg.ablation.variants},
                   {"seeds", cfg.ablation.seeds},
                   {"iterations", cfg.ablation.iterations}};
  return j;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot read experiment config: ") + e.what());
  }
  try {
    return experiment_from_json(j);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
}

}  // namespace rvm::cli
