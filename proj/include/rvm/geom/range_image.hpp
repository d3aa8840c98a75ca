#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rvm/geom/pose.hpp"
#include "rvm/geom/spherical.hpp"

namespace rvm::geom {

// Raster geometry: azimuth bins are uniform over (-pi, pi], column 0 starts at
// `azimuth_origin` and advances clockwise (decreasing azimuth) by default.
// Elevation rows come from a strictly monotone table of beam angles; bin
// edges sit halfway between adjacent beams.
struct RasterConfig {
  int width = 0;
  int height = 0;
  std::vector<double> elevation_table;  // one beam angle per row, radians
  double azimuth_origin = std::numbers::pi;
  bool clockwise = true;

  static RasterConfig uniform(int width, int height, double elevation_top, double elevation_bottom) {
    RasterConfig cfg;
    cfg.width = width;
    cfg.height = height;
    cfg.elevation_table.resize(height);
    if (height == 1) {
      cfg.elevation_table[0] = 0.5 * (elevation_top + elevation_bottom);
    } else {
      for (int r = 0; r < height; ++r)
        cfg.elevation_table[r] =
            elevation_top + (elevation_bottom - elevation_top) * r / double(height - 1);
    }
    cfg.validate();
    return cfg;
  }

  void validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("RasterConfig: width/height must be >= 1");
    if (static_cast<int>(elevation_table.size()) != height)
      throw std::invalid_argument("RasterConfig: elevation table size != height");
    for (int r = 0; r + 1 < height; ++r) {
      const double d = elevation_table[r + 1] - elevation_table[r];
      const double d0 = elevation_table[1] - elevation_table[0];
      if (d == 0.0 || (d > 0) != (d0 > 0))
        throw std::invalid_argument("RasterConfig: elevation table must be strictly monotone");
    }
  }

  double azimuth_bin_width() const { return 2.0 * std::numbers::pi / width; }

  int azimuth_to_col(double azimuth) const {
    const double span = clockwise ? (azimuth_origin - azimuth) : (azimuth - azimuth_origin);
    double frac = std::fmod(span, 2.0 * std::numbers::pi);
    if (frac < 0) frac += 2.0 * std::numbers::pi;
    int col = static_cast<int>(frac / azimuth_bin_width());
    return std::clamp(col, 0, width - 1);
  }

  double col_to_azimuth(int col) const {
    const double offset = (col + 0.5) * azimuth_bin_width();
    return wrap_angle(clockwise ? azimuth_origin - offset : azimuth_origin + offset);
  }

  // Row whose elevation bin contains `elevation`, or -1 when outside the table.
  int elevation_to_row(double elevation) const {
    if (height == 1) {
      return (elevation >= -std::numbers::pi / 2 && elevation <= std::numbers::pi / 2) ? 0 : -1;
    }
    const bool decreasing = elevation_table[1] < elevation_table[0];
    // Outer edges extend half a bin beyond the first/last beam.
    const double first_edge =
        elevation_table[0] + 0.5 * (elevation_table[0] - elevation_table[1]);
    const double last_edge = elevation_table[height - 1] +
                             0.5 * (elevation_table[height - 1] - elevation_table[height - 2]);
    if (decreasing) {
      if (elevation > first_edge || elevation < last_edge) return -1;
    } else {
      if (elevation < first_edge || elevation > last_edge) return -1;
    }
    int best = 0;
    double best_dist = std::abs(elevation - elevation_table[0]);
    for (int r = 1; r < height; ++r) {
      const double d = std::abs(elevation - elevation_table[r]);
      if (d < best_dist) {
        best_dist = d;
        best = r;
      }
    }
    return best;
  }

  double row_to_elevation(int row) const { return elevation_table[row]; }
};

// Fixed base channel order; map channels are appended when enabled.
inline std::vector<std::string> range_image_channels(bool with_map_channels) {
  std::vector<std::string> names = {"range", "reflectance", "valid"};
  if (with_map_channels) {
    names.push_back("height_above_ground");
    names.push_back("road_flag");
  }
  return names;
}

struct RangeImage {
  static constexpr int kRange = 0;
  static constexpr int kReflectance = 1;
  static constexpr int kValid = 2;
  static constexpr int kHeightAboveGround = 3;
  static constexpr int kRoadFlag = 4;

  RasterConfig config;
  Pose pose;            // world -> sensor at the start of the sweep
  int sweep_index = 0;  // <= 0; 0 is the current sweep
  std::vector<std::string> channels;
  std::vector<float> data;  // row-major height x width x channels

  int channel_count() const { return static_cast<int>(channels.size()); }

  float& at(int row, int col, int ch) {
    return data[(static_cast<std::size_t>(row) * config.width + col) * channels.size() + ch];
  }
  float at(int row, int col, int ch) const {
    return data[(static_cast<std::size_t>(row) * config.width + col) * channels.size() + ch];
  }

  bool valid(int row, int col) const { return at(row, col, kValid) > 0.5f; }

  // 3D point of a valid pixel in the sensor frame, reconstructed from the
  // stored range and the pixel's bin-center angles.
  Eigen::Vector3d point(int row, int col) const {
    Sphericald c{at(row, col, kRange), config.col_to_azimuth(col), config.row_to_elevation(row)};
    return spherical_to_cartesian(c);
  }
};

inline RangeImage make_empty_range_image(const RasterConfig& cfg, const Pose& pose,
                                         int sweep_index = 0, bool with_map_channels = false) {
  RangeImage img;
  img.config = cfg;
  img.pose = pose;
  img.sweep_index = sweep_index;
  img.channels = range_image_channels(with_map_channels);
  img.data.assign(static_cast<std::size_t>(cfg.height) * cfg.width * img.channels.size(), 0.0f);
  return img;
}

struct LidarPoint {
  Sphericald coord;  // sensor-frame angles
  float reflectance = 0.0f;
  float height_above_ground = 0.0f;
  float road_flag = 1.0f;
};

// Rasterize sensor-frame points. Bin collisions keep the smaller range;
// points whose elevation falls outside the beam table are dropped (counted).
inline RangeImage build_range_image(std::span<const LidarPoint> points, const RasterConfig& cfg,
                                    const Pose& pose, int sweep_index = 0,
                                    bool with_map_channels = false, int* dropped = nullptr) {
  cfg.validate();
  RangeImage img = make_empty_range_image(cfg, pose, sweep_index, with_map_channels);
  int dropped_count = 0;
  for (const LidarPoint& p : points) {
    const int row = cfg.elevation_to_row(p.coord.elevation);
    if (row < 0) {
      ++dropped_count;
      continue;
    }
    const int col = cfg.azimuth_to_col(p.coord.azimuth);
    const float r = static_cast<float>(p.coord.range);
    if (img.valid(row, col) && img.at(row, col, RangeImage::kRange) <= r) continue;
    img.at(row, col, RangeImage::kRange) = r;
    img.at(row, col, RangeImage::kReflectance) = p.reflectance;
    img.at(row, col, RangeImage::kValid) = 1.0f;
    if (with_map_channels) {
      img.at(row, col, RangeImage::kHeightAboveGround) = p.height_above_ground;
      img.at(row, col, RangeImage::kRoadFlag) = p.road_flag;
    }
  }
  if (dropped) *dropped = dropped_count;
  return img;
}

}  // namespace rvm::geom
