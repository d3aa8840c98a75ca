#pragma once

#include <filesystem>

#include "rvm/core/io.hpp"
#include "rvm/model/network.hpp"

namespace rvm::model {

inline json model_config_to_json(const ModelConfig& cfg) {
  return json{{"sweep_count", cfg.sweep_count},
              {"object_classes", cfg.object_classes},
              {"horizon", cfg.horizon},
              {"input_channels", cfg.input_channels},
              {"encoder_channels", cfg.encoder_channels},
              {"backbone_channels", cfg.backbone_channels},
              {"variant", to_string(cfg.variant)},
              {"range_scale", cfg.range_scale}};
}

inline ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.sweep_count = j.value("sweep_count", cfg.sweep_count);
  cfg.object_classes = j.value("object_classes", cfg.object_classes);
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.input_channels = j.value("input_channels", cfg.input_channels);
  cfg.encoder_channels = j.value("encoder_channels", cfg.encoder_channels);
  cfg.backbone_channels = j.value("backbone_channels", cfg.backbone_channels);
  cfg.variant = variant_from_string(j.value("variant", std::string("proposed")));
  cfg.range_scale = j.value("range_scale", cfg.range_scale);
  cfg.validate();
  return cfg;
}

// Checkpoint format: JSON header (layer names + shapes + training iteration)
// next to a little-endian float32 blob with each layer's kernel then bias.
template <typename Scalar>
void save_checkpoint(const std::filesystem::path& json_path, const Network<Scalar>& net,
                     int iteration) {
  json header;
  header["schema"] = "rvm.checkpoint.v1";
  header["iteration"] = iteration;
  header["model"] = model_config_to_json(net.config());
  json layers = json::array();
  std::vector<float> blob;
  for (const auto& layer : net.layers()) {
    layers.push_back({{"name", layer.name},
                      {"kernel", {layer.params.kh, layer.params.kw, layer.params.cin, layer.params.cout}},
                      {"stride", layer.stride}});
    for (const auto v : layer.params.kernel) blob.push_back(float(v));
    for (const auto v : layer.params.bias) blob.push_back(float(v));
  }
  header["layers"] = layers;
  std::filesystem::path blob_path = json_path;
  blob_path.replace_extension(".bin");
  header["blob"] = blob_path.filename().string();
  write_json_file(json_path, header);
  write_f32_blob(blob_path, blob);
}

template <typename Scalar = float>
Network<Scalar> load_checkpoint(const std::filesystem::path& json_path, int* iteration = nullptr) {
  const json header = read_json_file(json_path);
  if (header.at("schema").get<std::string>() != "rvm.checkpoint.v1")
    throw std::runtime_error("unexpected checkpoint schema in " + json_path.string());
  Network<Scalar> net(model_config_from_json(header.at("model")));
  const json& layers = header.at("layers");
  if (layers.size() != net.layers().size())
    throw std::runtime_error("checkpoint layer count does not match model configuration");
  std::size_t total = 0;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& meta = layers[i];
    const auto& layer = net.layers()[i];
    const auto shape = meta.at("kernel").get<std::vector<int>>();
    if (meta.at("name").get<std::string>() != layer.name || shape.size() != 4 ||
        shape[0] != layer.params.kh || shape[1] != layer.params.kw ||
        shape[2] != layer.params.cin || shape[3] != layer.params.cout)
      throw std::runtime_error("checkpoint layer mismatch at " + layer.name);
    total += layer.params.parameter_count();
  }
  const auto blob =
      read_f32_blob(json_path.parent_path() / header.at("blob").get<std::string>(), total);
  std::size_t offset = 0;
  for (auto& layer : net.layers()) {
    for (auto& v : layer.params.kernel) v = Scalar(blob[offset++]);
    for (auto& v : layer.params.bias) v = Scalar(blob[offset++]);
  }
  if (iteration) *iteration = header.at("iteration").get<int>();
  return net;
}

}  // namespace rvm::model
