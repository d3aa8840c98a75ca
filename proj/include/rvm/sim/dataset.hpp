#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rvm/core/io.hpp"
#include "rvm/sim/raycast.hpp"
#include "rvm/sim/scene.hpp"

namespace rvm::sim {

// Ground-truth track of one actor, expressed in the current sweep's BEV
// frame and sampled at the prediction interval.
struct ActorTrack {
  int actor_id = 0;
  int class_id = 1;
  double length = 0.0, width = 0.0;
  std::vector<Eigen::Vector2d> centers;  // t = 0..T
  std::vector<double> headings;          // t = 0..T
  int pixel_count = 0;                   // supporting pixels in the current sweep
};

// One training/evaluation frame: the sweep history plus per-pixel labels of
// the current sweep and the actor tracks they reference.
struct SweepSequence {
  std::vector<geom::RangeImage> sweeps;  // oldest first, current sweep last
  std::vector<int> pixel_class;          // H*W over the current sweep; 0 = background
  std::vector<int> pixel_instance;       // H*W; track index or -1
  std::vector<ActorTrack> tracks;

  const geom::RangeImage& current() const { return sweeps.back(); }
};

SweepSequence generate_sequence(const SimConfig& cfg, const Scene& scene);

// Deterministic dataset: scene i derives its own stream from (seed, i).
std::vector<SweepSequence> generate_dataset(const SimConfig& cfg, std::uint64_t seed);

json sim_config_to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const json& j);

void save_dataset(const std::filesystem::path& dir, const SimConfig& cfg,
                  const std::vector<SweepSequence>& dataset, std::uint64_t seed);
std::vector<SweepSequence> load_dataset(const std::filesystem::path& dir,
                                        SimConfig* cfg_out = nullptr);

}  // namespace rvm::sim
