#pragma once

#include <filesystem>

#include "rvm/core/io.hpp"
#include "rvm/geom/range_image.hpp"

namespace rvm::geom {

// On-disk raster format: JSON manifest next to a raw little-endian float32
// blob, row-major height x width x channels. Pose is stored row-major 3x4.
inline void save_range_image(const std::filesystem::path& json_path, const RangeImage& img) {
  json manifest;
  manifest["schema"] = "rvm.range_image.v1";
  manifest["height"] = img.config.height;
  manifest["width"] = img.config.width;
  manifest["channels"] = img.channels;
  manifest["sweep_index"] = img.sweep_index;
  std::vector<double> pose(12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose[r * 4 + c] = img.pose.rotation(r, c);
    pose[r * 4 + 3] = img.pose.translation(r);
  }
  manifest["pose"] = pose;
  manifest["elevation_table"] = img.config.elevation_table;
  manifest["azimuth_origin"] = img.config.azimuth_origin;
  manifest["clockwise"] = img.config.clockwise;
  std::filesystem::path blob_path = json_path;
  blob_path.replace_extension(".bin");
  manifest["blob"] = blob_path.filename().string();
  write_json_file(json_path, manifest);
  write_f32_blob(blob_path, img.data);
}

inline RangeImage load_range_image(const std::filesystem::path& json_path) {
  const json manifest = read_json_file(json_path);
  if (manifest.at("schema").get<std::string>() != "rvm.range_image.v1")
    throw std::runtime_error("unexpected range image schema in " + json_path.string());
  RangeImage img;
  img.config.height = manifest.at("height").get<int>();
  img.config.width = manifest.at("width").get<int>();
  img.config.elevation_table = manifest.at("elevation_table").get<std::vector<double>>();
  img.config.azimuth_origin = manifest.at("azimuth_origin").get<double>();
  img.config.clockwise = manifest.at("clockwise").get<bool>();
  img.config.validate();
  img.sweep_index = manifest.at("sweep_index").get<int>();
  img.channels = manifest.at("channels").get<std::vector<std::string>>();
  const auto pose = manifest.at("pose").get<std::vector<double>>();
  if (pose.size() != 12) throw std::runtime_error("pose must be row-major 3x4");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) img.pose.rotation(r, c) = pose[r * 4 + c];
    img.pose.translation(r) = pose[r * 4 + 3];
  }
  const std::size_t count = static_cast<std::size_t>(img.config.height) * img.config.width *
                            img.channels.size();
  img.data = read_f32_blob(json_path.parent_path() / manifest.at("blob").get<std::string>(), count);
  return img;
}

}  // namespace rvm::geom
