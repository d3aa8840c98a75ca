#include "rvm/pipeline/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rvm/core/errors.hpp"
#include "rvm/loss/focal.hpp"
#include "rvm/model/checkpoint.hpp"
#include "rvm/net/adam.hpp"

namespace rvm::pipeline {

namespace {

struct Prepared {
  model::Network<float>::Inputs inputs;
  FrameTargets targets;
};

std::string checkpoint_name(int iteration) {
  std::ostringstream ss;
  ss << "checkpoint_" << std::setw(6) << std::setfill('0') << iteration << ".json";
  return ss.str();
}

}  // namespace

TrainResult train_model(model::Network<float>& net,
                        const std::vector<sim::SweepSequence>& train_set,
                        const loss::LossConfig& loss_cfg, const TrainConfig& train_cfg,
                        std::uint64_t seed, const std::filesystem::path& out_dir,
                        const std::function<void(const LossRow&)>& on_log) {
  loss_cfg.validate();
  train_cfg.validate();
  if (train_set.empty() && train_cfg.iterations > 0)
    throw std::invalid_argument("train_model: empty training set");

  const model::ModelConfig& cfg = net.config();
  const int horizon = cfg.horizon;
  const int classes = cfg.total_classes();
  const int out_channels = cfg.output_channels();
  const int reg_offset = cfg.regression_offset();
  const int reg_channels = loss::reg::channel_count(horizon);

  Rng rng(seed);
  net.init_params(rng.fork(1));
  Rng pick_rng = rng.fork(2);

  const bool with_output = !out_dir.empty();
  if (with_output) {
    std::filesystem::create_directories(out_dir);
    model::save_checkpoint(out_dir / checkpoint_name(0), net, 0);
  }

  std::vector<Prepared> prepared;
  prepared.reserve(train_set.size());
  for (const sim::SweepSequence& seq : train_set)
    prepared.push_back({make_inputs<float>(seq, cfg), make_frame_targets(seq)});

  auto grads = net.make_gradient_store();
  struct LayerOpt {
    net::AdamState kernel, bias;
  };
  std::vector<LayerOpt> opt(net.layers().size());
  for (std::size_t i = 0; i < opt.size(); ++i) {
    opt[i].kernel.init(net.layers()[i].params.kernel.size());
    opt[i].bias.init(net.layers()[i].params.bias.size());
  }
  net::AdamConfig adam;
  adam.lr = train_cfg.lr;

  TrainResult result;
  result.iterations = train_cfg.iterations;

  for (int k = 0; k < train_cfg.iterations; ++k) {
    const Prepared& sample = prepared[pick_rng.uniform_int(0, int(prepared.size()) - 1)];
    model::Network<float>::Cache cache;
    const net::Tensor<float> out = net.forward(sample.inputs, &cache);
    net::Tensor<float> grad_out(out.h, out.w, out.c);

    // Classification over the logit slice.
    const std::size_t pixels = std::size_t(out.h) * out.w;
    net::Tensor<float> logits(out.h, out.w, classes);
    for (std::size_t p = 0; p < pixels; ++p)
      for (int c = 0; c < classes; ++c) logits.data[p * classes + c] = out.data[p * out_channels + c];
    net::Tensor<float> grad_logits(out.h, out.w, classes);
    const double loss_cls =
        loss::focal_loss(logits, std::span<const int>(sample.targets.labels), loss_cfg.gamma,
                         &grad_logits);
    for (std::size_t p = 0; p < pixels; ++p)
      for (int c = 0; c < classes; ++c) grad_out.data[p * out_channels + c] = grad_logits.data[p * classes + c];

    // Regression over the supervised pixels.
    const loss::CurriculumState state = loss::CurriculumState::at(k, train_cfg.iterations, loss_cfg);
    const std::vector<double> scale_gt = loss::curriculum_scales(horizon, loss_cfg, state);
    const std::vector<double> weights = loss::curriculum_weights(horizon, loss_cfg, state);
    std::vector<loss::RegressionSample<float>> reg_samples;
    reg_samples.reserve(sample.targets.pixels.size());
    for (const PixelTarget& pt : sample.targets.pixels) {
      loss::RegressionSample<float> rs;
      rs.channels = std::span<const float>(&out.data[pt.pixel * out_channels + reg_offset],
                                           std::size_t(reg_channels));
      rs.grad = std::span<float>(&grad_out.data[pt.pixel * out_channels + reg_offset],
                                 std::size_t(reg_channels));
      rs.point = pt.point;
      rs.target = &sample.targets.targets[pt.target_index];
      rs.pixel_weight = pt.weight;
      reg_samples.push_back(rs);
    }
    const double loss_reg = loss::regression_loss(
        std::span<loss::RegressionSample<float>>(reg_samples), sample.targets.object_count, horizon,
        scale_gt, weights, train_cfg.l1_regression);
    // Total loss is cls + lambda * reg; the slices are channel-disjoint, so
    // the weighting applies to the regression slice alone.
    for (std::size_t p = 0; p < pixels; ++p)
      for (int c = reg_offset; c < out_channels; ++c)
        grad_out.data[p * out_channels + c] *= float(loss_cfg.lambda);

    const double total = loss::total_loss(loss_cls, loss_reg, loss_cfg.lambda);
    if (!std::isfinite(total))
      throw NumericError("train_model: non-finite loss at iteration " + std::to_string(k));

    for (auto& g : grads) {
      std::fill(g.kernel.begin(), g.kernel.end(), 0.0f);
      std::fill(g.bias.begin(), g.bias.end(), 0.0f);
    }
    net.backward(sample.inputs, cache, grad_out, grads);
    if (train_cfg.grad_clip > 0) {
      double norm_sq = 0.0;
      for (const auto& g : grads) {
        for (const float v : g.kernel) norm_sq += double(v) * v;
        for (const float v : g.bias) norm_sq += double(v) * v;
      }
      const double norm = std::sqrt(norm_sq);
      if (norm > train_cfg.grad_clip) {
        const float scale = float(train_cfg.grad_clip / norm);
        for (auto& g : grads) {
          for (float& v : g.kernel) v *= scale;
          for (float& v : g.bias) v *= scale;
        }
      }
    }
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      auto& layer = net.layers()[i];
      net::adam_step(std::span<float>(layer.params.kernel), std::span<const float>(grads[i].kernel),
                     opt[i].kernel, adam, layer.name + ".kernel");
      net::adam_step(std::span<float>(layer.params.bias), std::span<const float>(grads[i].bias),
                     opt[i].bias, adam, layer.name + ".bias");
    }

    if (k % train_cfg.log_every == 0 || k + 1 == train_cfg.iterations) {
      result.curve.push_back({k, loss_cls, loss_reg, state.alpha(), scale_gt});
      if (on_log) on_log(result.curve.back());
    }
    if (with_output && (k + 1) % train_cfg.checkpoint_every == 0 && k + 1 != train_cfg.iterations)
      model::save_checkpoint(out_dir / checkpoint_name(k + 1), net, k + 1);
  }

  if (with_output) {
    model::save_checkpoint(out_dir / "checkpoint.json", net, train_cfg.iterations);
    write_loss_csv(out_dir / "loss.csv", result, horizon);
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const TrainResult& result, int horizon) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,loss_cls,loss_reg,alpha";
  for (int t = 0; t <= horizon; ++t) out << ",btilde_t" << t;
  out << "\n";
  out << std::setprecision(10);
  for (const LossRow& row : result.curve) {
    out << row.iteration << "," << row.loss_cls << "," << row.loss_reg << "," << row.alpha;
    for (double v : row.scale_gt) out << "," << v;
    out << "\n";
  }
}

}  // namespace rvm::pipeline
