#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "rvm/geom/range_image.hpp"

namespace rvm::geom {

// Per SOURCE pixel of a previous sweep: the target pixel it lands on in the
// current sweep's raster plus its re-projected range, or invalid.
struct WarpMap {
  struct Entry {
    std::int32_t row = -1;
    std::int32_t col = -1;
    float range = 0.0f;
    bool valid() const { return row >= 0; }
  };

  int height = 0;
  int width = 0;
  std::vector<Entry> entries;  // row-major height x width

  Entry& at(int row, int col) { return entries[static_cast<std::size_t>(row) * width + col]; }
  const Entry& at(int row, int col) const {
    return entries[static_cast<std::size_t>(row) * width + col];
  }
};

// Map every valid pixel of `prev` into the raster of the sweep captured at
// `current_pose`: lift to 3D, transform between sensor frames, re-project and
// bin. When several sources land on one target, only the smallest re-projected
// range survives (ties: lowest source index).
inline WarpMap compute_warp_mapping(const RangeImage& prev, const Pose& current_pose,
                                    const RasterConfig& cfg) {
  WarpMap map;
  map.height = prev.config.height;
  map.width = prev.config.width;
  map.entries.assign(static_cast<std::size_t>(map.height) * map.width, {});

  const Pose relative = compose(current_pose, inverse(prev.pose));

  // Best claimant per target pixel: (range, source index).
  struct Claim {
    float range = std::numeric_limits<float>::infinity();
    std::int64_t source = -1;
  };
  std::vector<Claim> claims(static_cast<std::size_t>(cfg.height) * cfg.width);

  for (int row = 0; row < map.height; ++row) {
    for (int col = 0; col < map.width; ++col) {
      if (!prev.valid(row, col)) continue;
      const Eigen::Vector3d transformed = relative.apply(prev.point(row, col));
      const double r = transformed.norm();
      if (r <= 0.0) continue;
      Sphericald sph = cartesian_to_spherical(transformed);
      const int target_row = cfg.elevation_to_row(sph.elevation);
      if (target_row < 0) continue;  // projects out of the raster
      const int target_col = cfg.azimuth_to_col(sph.azimuth);
      const std::int64_t source = static_cast<std::int64_t>(row) * map.width + col;
      WarpMap::Entry& e = map.at(row, col);
      e.row = target_row;
      e.col = target_col;
      e.range = static_cast<float>(r);
      Claim& c = claims[static_cast<std::size_t>(target_row) * cfg.width + target_col];
      if (e.range < c.range || (e.range == c.range && source < c.source)) {
        c.range = e.range;
        c.source = source;
      }
    }
  }

  // Losing sources are invalidated so each target keeps one claimant.
  for (int row = 0; row < map.height; ++row) {
    for (int col = 0; col < map.width; ++col) {
      WarpMap::Entry& e = map.at(row, col);
      if (!e.valid()) continue;
      const Claim& c = claims[static_cast<std::size_t>(e.row) * cfg.width + e.col];
      if (c.source != static_cast<std::int64_t>(row) * map.width + col) e = {};
    }
  }
  return map;
}

// Move per-pixel features through a warp map. Target pixels nobody maps to
// receive `fill` and mask 0.
template <typename Scalar>
void apply_warp(const Scalar* src, int height, int width, int features, const WarpMap& map,
                Scalar fill, Scalar* dst, Scalar* mask) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  for (std::size_t i = 0; i < n * features; ++i) dst[i] = fill;
  for (std::size_t i = 0; i < n; ++i) mask[i] = Scalar(0);
  for (int row = 0; row < map.height; ++row) {
    for (int col = 0; col < map.width; ++col) {
      const WarpMap::Entry& e = map.at(row, col);
      if (!e.valid()) continue;
      const std::size_t s = (static_cast<std::size_t>(row) * map.width + col) * features;
      const std::size_t t = (static_cast<std::size_t>(e.row) * width + e.col) * features;
      for (int f = 0; f < features; ++f) dst[t + f] = src[s + f];
      mask[static_cast<std::size_t>(e.row) * width + e.col] = Scalar(1);
    }
  }
}

// Adjoint of apply_warp: routes target-pixel gradients back to their sources.
template <typename Scalar>
void apply_warp_backward(const Scalar* grad_dst, int height, int width, int features,
                         const WarpMap& map, Scalar* grad_src) {
  for (int row = 0; row < map.height; ++row) {
    for (int col = 0; col < map.width; ++col) {
      const WarpMap::Entry& e = map.at(row, col);
      if (!e.valid()) continue;
      const std::size_t s = (static_cast<std::size_t>(row) * map.width + col) * features;
      const std::size_t t = (static_cast<std::size_t>(e.row) * width + e.col) * features;
      for (int f = 0; f < features; ++f) grad_src[s + f] += grad_dst[t + f];
    }
  }
}

}  // namespace rvm::geom
