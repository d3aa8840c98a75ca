#include <doctest.h>

#include <numbers>

#include "rvm/model/checkpoint.hpp"
#include "rvm/model/ego.hpp"
#include "rvm/model/network.hpp"

using namespace rvm;
using model::ModelConfig;
using model::Network;
using model::Variant;

namespace {
constexpr double kPi = std::numbers::pi;

geom::Pose planar(double x, double y, double yaw, double z = 0.0) {
  return geom::Pose::from_planar({x, y}, yaw, z);
}

ModelConfig tiny_config(Variant variant) {
  ModelConfig cfg;
  cfg.sweep_count = 2;
  cfg.object_classes = 1;
  cfg.horizon = 1;
  cfg.encoder_channels = 3;
  cfg.backbone_channels = 4;
  cfg.variant = variant;
  return cfg;
}

template <typename S>
typename Network<S>::Inputs tiny_inputs(const ModelConfig& cfg, Rng& rng, int h = 4, int w = 8) {
  typename Network<S>::Inputs in;
  const geom::RasterConfig raster = geom::RasterConfig::uniform(w, h, 0.05, -0.3);
  const int sweeps = cfg.variant == Variant::kEarlyFusion ? 1 : cfg.sweep_count;
  const int channels =
      cfg.variant == Variant::kEarlyFusion ? cfg.input_channels * cfg.sweep_count : cfg.input_channels;
  for (int s = 0; s < sweeps; ++s) {
    net::Tensor<S> t(h, w, channels);
    for (auto& v : t.data) v = S(rng.uniform(-1, 1));
    in.sweeps.push_back(std::move(t));
  }
  if (cfg.variant != Variant::kEarlyFusion) {
    for (int s = 0; s < cfg.sweep_count; ++s) {
      net::Tensor<S> e(h, w, 3);
      for (auto& v : e.data) v = S(rng.uniform(-1, 1));
      in.ego.push_back(std::move(e));
    }
    for (int s = 0; s + 1 < cfg.sweep_count; ++s) {
      geom::RangeImage img = geom::make_empty_range_image(raster, planar(0, 0, 0));
      Rng img_rng = rng.fork(s);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
          if (img_rng.uniform() < 0.8) {
            img.at(r, c, geom::RangeImage::kRange) = float(img_rng.uniform(3, 40));
            img.at(r, c, geom::RangeImage::kValid) = 1.0f;
          }
      in.warps.push_back(
          geom::compute_warp_mapping(img, planar(0.4 * (s + 1), -0.2, 0.1 * s), raster));
    }
  }
  return in;
}
}  // namespace

TEST_CASE("ego_motion_delta") {
  SUBCASE("identical poses give zero") {
    const geom::Pose p = planar(3, 4, 0.5, 1.7);
    CHECK(model::ego_motion_delta(p, p).norm() < 1e-12);
  }
  SUBCASE("forward motion puts the old origin behind") {
    const geom::Pose prev = planar(0, 0, 0, 2.0);
    const geom::Pose cur = planar(10, 0, 0, 2.0);
    const Eigen::Vector3d d = model::ego_motion_delta(cur, prev);
    CHECK((d - Eigen::Vector3d(-10, 0, 0)).norm() < 1e-12);
  }
  SUBCASE("pure yaw keeps the origin fixed") {
    const geom::Pose prev = planar(0, 0, 0.0, 2.0);
    const geom::Pose cur = planar(0, 0, kPi / 2, 2.0);
    CHECK(model::ego_motion_delta(cur, prev).norm() < 1e-12);
  }
}

TEST_CASE("rotate_ego_feature") {
  SUBCASE("zero angle is the identity") {
    const Eigen::Vector2d d = model::rotate_ego_feature({3, 4, 0}, 0.0);
    CHECK((d - Eigen::Vector2d(3, 4)).norm() < 1e-12);
  }
  SUBCASE("quarter turn example") {
    const Eigen::Vector2d d = model::rotate_ego_feature({-10, 0, 0}, kPi / 2);
    CHECK(d.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.y() == doctest::Approx(10.0).epsilon(1e-12));
  }
  SUBCASE("norm is preserved") {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
      const Eigen::Vector3d delta(3, 4, rng.uniform(-2, 2));
      CHECK(model::rotate_ego_feature(delta, rng.uniform(-kPi, kPi)).norm() ==
            doctest::Approx(5.0).epsilon(1e-12));
    }
  }
  SUBCASE("rotating the displacement and the query azimuth together is invariant") {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      const Eigen::Vector3d delta(rng.uniform(-5, 5), rng.uniform(-5, 5), 0);
      const double theta = rng.uniform(-kPi, kPi);
      const double psi = rng.uniform(-kPi, kPi);
      const Eigen::Vector2d rotated = geom::rotation2(psi) * delta.head<2>();
      const Eigen::Vector2d a = model::rotate_ego_feature(delta, theta);
      const Eigen::Vector2d b =
          model::rotate_ego_feature({rotated.x(), rotated.y(), 0.0}, theta + psi);
      CHECK((a - b).norm() < 1e-9);
    }
  }
}

TEST_CASE("output channel formula") {
  for (int classes : {1, 2, 4}) {
    for (int horizon : {1, 3, 6, 10}) {
      ModelConfig cfg = tiny_config(Variant::kProposed);
      cfg.object_classes = classes;
      cfg.horizon = horizon;
      CHECK(cfg.output_channels() == (classes + 1) + 2 + 6 * (horizon + 1));
    }
  }
  ModelConfig cfg = tiny_config(Variant::kProposed);
  cfg.object_classes = 1;  // two classes including background
  cfg.horizon = 6;
  CHECK(cfg.output_channels() == 46);
}

TEST_CASE("forward is deterministic and finite on duplicated sweeps") {
  const ModelConfig cfg = tiny_config(Variant::kProposed);
  Network<float> net(cfg);
  net.init_params(Rng(3));
  Rng rng(4);
  auto in = tiny_inputs<float>(cfg, rng);
  // duplicate the current sweep everywhere with zero ego motion
  in.sweeps[0] = in.sweeps[1];
  for (auto& e : in.ego) e.fill(0.0f);
  const auto a = net.forward(in);
  const auto b = net.forward(in);
  CHECK(a.data == b.data);
  for (float v : a.data) CHECK(std::isfinite(v));
  CHECK(a.c == cfg.output_channels());
}

TEST_CASE("shared encoder produces identical features for identical sweeps") {
  const ModelConfig cfg = tiny_config(Variant::kProposed);
  Network<float> net(cfg);
  net.init_params(Rng(5));
  Rng rng(6);
  auto in = tiny_inputs<float>(cfg, rng);
  in.sweeps[0] = in.sweeps[1];
  Network<float>::Cache cache;
  net.forward(in, &cache);
  CHECK(cache.enc_r2[0].data == cache.enc_r2[1].data);
}

TEST_CASE("variant structure") {
  SUBCASE("no_transformer drops the transformer from the parameter manifest") {
    Network<float> proposed(tiny_config(Variant::kProposed));
    Network<float> without(tiny_config(Variant::kNoTransformer));
    bool proposed_has = false, without_has = false;
    for (const auto& l : proposed.layers())
      if (l.name.find("transformer") != std::string::npos) proposed_has = true;
    for (const auto& l : without.layers())
      if (l.name.find("transformer") != std::string::npos) without_has = true;
    CHECK(proposed_has);
    CHECK_FALSE(without_has);
  }
  SUBCASE("global ego features are constant across columns") {
    const geom::RasterConfig raster = geom::RasterConfig::uniform(16, 3, 0.05, -0.3);
    const Eigen::Vector3d delta(2.5, -1.0, 0.2);
    const auto rotated = model::make_ego_feature<float>(delta, raster, true);
    const auto global = model::make_ego_feature<float>(delta, raster, false);
    bool rotated_varies = false;
    for (int c = 1; c < 16; ++c) {
      if (global.at(0, c, 0) != global.at(0, 0, 0) || global.at(0, c, 1) != global.at(0, 0, 1))
        FAIL("global ego feature should be constant");
      if (rotated.at(0, c, 0) != rotated.at(0, 0, 0)) rotated_varies = true;
    }
    CHECK(rotated_varies);
  }
  SUBCASE("early fusion takes one stacked raster and widens the encoder") {
    const ModelConfig cfg = tiny_config(Variant::kEarlyFusion);
    Network<float> net(cfg);
    CHECK(net.layers().front().params.cin == cfg.input_channels * cfg.sweep_count);
    bool has_transformer = false;
    for (const auto& l : net.layers())
      if (l.name.find("transformer") != std::string::npos) has_transformer = true;
    CHECK_FALSE(has_transformer);
  }
  SUBCASE("all variants emit the same output shape") {
    Rng rng(7);
    for (Variant v : {Variant::kProposed, Variant::kEarlyFusion, Variant::kNoTransformer,
                      Variant::kGlobalEgo}) {
      const ModelConfig cfg = tiny_config(v);
      Network<float> net(cfg);
      net.init_params(Rng(8));
      Rng in_rng = rng.fork(int(v));
      const auto out = net.forward(tiny_inputs<float>(cfg, in_rng));
      CHECK(out.h == 4);
      CHECK(out.w == 8);
      CHECK(out.c == cfg.output_channels());
    }
  }
}

TEST_CASE("network gradients match finite differences across variants") {
  Rng rng(9);
  for (Variant variant :
       {Variant::kProposed, Variant::kNoTransformer, Variant::kEarlyFusion}) {
    const ModelConfig cfg = tiny_config(variant);
    Network<double> net(cfg);
    net.init_params(Rng(10 + int(variant)));
    Rng in_rng = rng.fork(100 + int(variant));
    const auto in = tiny_inputs<double>(cfg, in_rng);

    Network<double>::Cache cache;
    const auto out = net.forward(in, &cache);
    net::Tensor<double> dir(out.h, out.w, out.c);
    for (auto& v : dir.data) v = in_rng.uniform(-1, 1);
    auto grads = net.make_gradient_store();
    net.backward(in, cache, dir, grads);

    const auto project = [&]() {
      const auto y = net.forward(in);
      double acc = 0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += y.data[i] * dir.data[i];
      return acc;
    };

    // spot-check a handful of parameters in every layer
    const double eps = 1e-6;
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
      auto& params = net.layers()[li].params;
      Rng pick(1000 + li);
      for (int rep = 0; rep < 4; ++rep) {
        const bool use_bias = rep == 3 && !params.bias.empty();
        auto& buf = use_bias ? params.bias : params.kernel;
        auto& gbuf = use_bias ? grads[li].bias : grads[li].kernel;
        const std::size_t idx = std::size_t(pick.uniform_int(0, int(buf.size()) - 1));
        const double keep = buf[idx];
        buf[idx] = keep + eps;
        const double hi = project();
        buf[idx] = keep - eps;
        const double lo = project();
        buf[idx] = keep;
        const double fd = (hi - lo) / (2 * eps);
        const double denom = std::max({std::abs(fd), std::abs(gbuf[idx]), 1e-6});
        INFO("layer ", net.layers()[li].name, " idx ", idx);
        CHECK(std::abs(fd - gbuf[idx]) / denom < 1e-4);
      }
    }
  }
}

TEST_CASE("checkpoint round trip") {
  const ModelConfig cfg = tiny_config(Variant::kProposed);
  Network<float> net(cfg);
  net.init_params(Rng(11));
  const auto dir = std::filesystem::temp_directory_path() / "rvm_model_test";
  std::filesystem::create_directories(dir);
  model::save_checkpoint(dir / "ckpt.json", net, 123);
  int iteration = 0;
  const auto loaded = model::load_checkpoint<float>(dir / "ckpt.json", &iteration);
  CHECK(iteration == 123);
  REQUIRE(loaded.layers().size() == net.layers().size());
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    CHECK(loaded.layers()[i].params.kernel == net.layers()[i].params.kernel);
    CHECK(loaded.layers()[i].params.bias == net.layers()[i].params.bias);
  }
  std::filesystem::remove_all(dir);
}
