#include "rvm/sim/dataset.hpp"

#include <iomanip>
#include <sstream>

#include "rvm/geom/serialize.hpp"

namespace rvm::sim {

namespace {

std::string scene_dir_name(int index) {
  std::ostringstream ss;
  ss << "scene_" << std::setw(4) << std::setfill('0') << index;
  return ss.str();
}

std::string sweep_file_name(int slot) {
  std::ostringstream ss;
  ss << "sweep_" << std::setw(2) << std::setfill('0') << slot << ".json";
  return ss.str();
}

}  // namespace

SweepSequence generate_sequence(const SimConfig& cfg, const Scene& scene) {
  SweepSequence seq;
  const int prev = cfg.sweep_count - 1;
  seq.sweeps.reserve(cfg.sweep_count);
  std::vector<int> hit_actor;
  for (int tick = -prev; tick <= 0; ++tick) {
    seq.sweeps.push_back(raycast_sweep(scene, tick, tick == 0 ? &hit_actor : nullptr));
  }

  const geom::RasterConfig& raster = scene.lidar.raster;
  const std::size_t pixels = static_cast<std::size_t>(raster.height) * raster.width;
  seq.pixel_class.assign(pixels, 0);
  seq.pixel_instance.assign(pixels, -1);

  // Actor tracks in the current sensor's BEV frame; the ego pose is planar so
  // the world-to-sensor map reduces to a 2D rotation and translation.
  const EgoState ego = scene.ego_at(0.0);
  const Eigen::Matrix2d world_to_ego = geom::rotation2(ego.heading).transpose();
  seq.tracks.resize(scene.actors.size());
  for (std::size_t i = 0; i < scene.actors.size(); ++i) {
    ActorTrack& track = seq.tracks[i];
    const Actor& base = scene.actors[i];
    track.actor_id = static_cast<int>(i);
    track.class_id = base.class_id;
    track.length = base.length;
    track.width = base.width;
    Actor state = base;
    for (int t = 0; t <= cfg.horizon; ++t) {
      if (t > 0) state = step_actor(state, cfg.horizon_dt);
      track.centers.push_back(world_to_ego * (state.center - ego.position));
      track.headings.push_back(geom::wrap_angle(state.heading - ego.heading));
    }
  }

  for (std::size_t p = 0; p < pixels; ++p) {
    const int actor = hit_actor[p];
    if (actor < 0) continue;
    seq.pixel_instance[p] = actor;
    seq.pixel_class[p] = scene.actors[actor].class_id;
    seq.tracks[actor].pixel_count += 1;
  }
  return seq;
}

std::vector<SweepSequence> generate_dataset(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<SweepSequence> dataset;
  dataset.reserve(cfg.scene_count);
  Rng root(seed);
  for (int i = 0; i < cfg.scene_count; ++i) {
    const Scene scene = make_random_scene(cfg, root.fork(static_cast<std::uint64_t>(i)));
    dataset.push_back(generate_sequence(cfg, scene));
  }
  return dataset;
}

json sim_config_to_json(const SimConfig& cfg) {
  json raster;
  raster["width"] = cfg.lidar.raster.width;
  raster["height"] = cfg.lidar.raster.height;
  raster["elevation_table"] = cfg.lidar.raster.elevation_table;
  raster["azimuth_origin"] = cfg.lidar.raster.azimuth_origin;
  raster["clockwise"] = cfg.lidar.raster.clockwise;
  return json{{"scene_count", cfg.scene_count},
              {"raster", raster},
              {"max_range", cfg.lidar.max_range},
              {"sensor_height", cfg.lidar.sensor_height},
              {"map_channels", cfg.lidar.map_channels},
              {"ground_plane", cfg.lidar.ground_plane},
              {"ground_reflectance", cfg.lidar.ground_reflectance},
              {"class_reflectance", cfg.lidar.class_reflectance},
              {"sweep_count", cfg.sweep_count},
              {"sweep_dt", cfg.sweep_dt},
              {"horizon", cfg.horizon},
              {"horizon_dt", cfg.horizon_dt},
              {"class_count", cfg.class_count},
              {"actors_min", cfg.actors_min},
              {"actors_max", cfg.actors_max},
              {"actor_speed_max", cfg.actor_speed_max},
              {"actor_yaw_rate_max", cfg.actor_yaw_rate_max},
              {"actor_length_min", cfg.actor_length_min},
              {"actor_length_max", cfg.actor_length_max},
              {"actor_width_min", cfg.actor_width_min},
              {"actor_width_max", cfg.actor_width_max},
              {"actor_height_min", cfg.actor_height_min},
              {"actor_height_max", cfg.actor_height_max},
              {"spawn_radius_min", cfg.spawn_radius_min},
              {"spawn_radius_max", cfg.spawn_radius_max},
              {"spawn_separation", cfg.spawn_separation},
              {"ego_speed_max", cfg.ego_speed_max},
              {"ego_yaw_rate_max", cfg.ego_yaw_rate_max}};
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig cfg;
  if (j.contains("raster")) {
    const json& raster = j.at("raster");
    cfg.lidar.raster.width = raster.value("width", cfg.lidar.raster.width);
    cfg.lidar.raster.height = raster.value("height", cfg.lidar.raster.height);
    if (raster.contains("elevation_table")) {
      cfg.lidar.raster.elevation_table = raster.at("elevation_table").get<std::vector<double>>();
    } else {
      const double top = raster.value("elevation_top", 0.0349066);
      const double bottom = raster.value("elevation_bottom", -0.349066);
      cfg.lidar.raster = geom::RasterConfig::uniform(cfg.lidar.raster.width,
                                                     cfg.lidar.raster.height, top, bottom);
    }
    cfg.lidar.raster.azimuth_origin = raster.value("azimuth_origin", cfg.lidar.raster.azimuth_origin);
    cfg.lidar.raster.clockwise = raster.value("clockwise", cfg.lidar.raster.clockwise);
  }
  cfg.scene_count = j.value("scene_count", cfg.scene_count);
  cfg.lidar.max_range = j.value("max_range", cfg.lidar.max_range);
  cfg.lidar.sensor_height = j.value("sensor_height", cfg.lidar.sensor_height);
  cfg.lidar.map_channels = j.value("map_channels", cfg.lidar.map_channels);
  cfg.lidar.ground_plane = j.value("ground_plane", cfg.lidar.ground_plane);
  cfg.lidar.ground_reflectance = j.value("ground_reflectance", cfg.lidar.ground_reflectance);
  if (j.contains("class_reflectance"))
    cfg.lidar.class_reflectance = j.at("class_reflectance").get<std::vector<double>>();
  cfg.sweep_count = j.value("sweep_count", cfg.sweep_count);
  cfg.sweep_dt = j.value("sweep_dt", cfg.sweep_dt);
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.horizon_dt = j.value("horizon_dt", cfg.horizon_dt);
  cfg.class_count = j.value("class_count", cfg.class_count);
  cfg.actors_min = j.value("actors_min", cfg.actors_min);
  cfg.actors_max = j.value("actors_max", cfg.actors_max);
  cfg.actor_speed_max = j.value("actor_speed_max", cfg.actor_speed_max);
  cfg.actor_yaw_rate_max = j.value("actor_yaw_rate_max", cfg.actor_yaw_rate_max);
  cfg.actor_length_min = j.value("actor_length_min", cfg.actor_length_min);
  cfg.actor_length_max = j.value("actor_length_max", cfg.actor_length_max);
  cfg.actor_width_min = j.value("actor_width_min", cfg.actor_width_min);
  cfg.actor_width_max = j.value("actor_width_max", cfg.actor_width_max);
  cfg.actor_height_min = j.value("actor_height_min", cfg.actor_height_min);
  cfg.actor_height_max = j.value("actor_height_max", cfg.actor_height_max);
  cfg.spawn_radius_min = j.value("spawn_radius_min", cfg.spawn_radius_min);
  cfg.spawn_radius_max = j.value("spawn_radius_max", cfg.spawn_radius_max);
  cfg.spawn_separation = j.value("spawn_separation", cfg.spawn_separation);
  cfg.ego_speed_max = j.value("ego_speed_max", cfg.ego_speed_max);
  cfg.ego_yaw_rate_max = j.value("ego_yaw_rate_max", cfg.ego_yaw_rate_max);
  cfg.validate();
  return cfg;
}

void save_dataset(const std::filesystem::path& dir, const SimConfig& cfg,
                  const std::vector<SweepSequence>& dataset, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["schema"] = "rvm.dataset.v1";
  manifest["seed"] = seed;
  manifest["simulator"] = sim_config_to_json(cfg);
  json scene_names = json::array();

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const SweepSequence& seq = dataset[i];
    const std::string name = scene_dir_name(static_cast<int>(i));
    scene_names.push_back(name);
    const std::filesystem::path scene_dir = dir / name;
    std::filesystem::create_directories(scene_dir);
    for (std::size_t s = 0; s < seq.sweeps.size(); ++s)
      geom::save_range_image(scene_dir / sweep_file_name(static_cast<int>(s)), seq.sweeps[s]);

    // Per-pixel class and instance ids ride in a two-channel label raster.
    std::vector<float> label_raster(seq.pixel_class.size() * 2);
    for (std::size_t p = 0; p < seq.pixel_class.size(); ++p) {
      label_raster[2 * p + 0] = static_cast<float>(seq.pixel_class[p]);
      label_raster[2 * p + 1] = static_cast<float>(seq.pixel_instance[p]);
    }
    write_f32_blob(scene_dir / "labels.bin", label_raster);

    json labels;
    labels["schema"] = "rvm.labels.v1";
    labels["raster_channels"] = {"class_id", "instance_id"};
    labels["raster_blob"] = "labels.bin";
    labels["horizon"] = cfg.horizon;
    labels["horizon_dt"] = cfg.horizon_dt;
    json actors = json::array();
    for (const ActorTrack& track : seq.tracks) {
      json traj = json::array();
      for (std::size_t t = 0; t < track.centers.size(); ++t) {
        traj.push_back({{"t", double(t) * cfg.horizon_dt},
                        {"center", {track.centers[t].x(), track.centers[t].y()}},
                        {"heading", track.headings[t]},
                        {"l", track.length},
                        {"w", track.width}});
      }
      actors.push_back({{"id", track.actor_id},
                        {"class_id", track.class_id},
                        {"length", track.length},
                        {"width", track.width},
                        {"pixel_count", track.pixel_count},
                        {"trajectory", traj}});
    }
    labels["actors"] = actors;
    write_json_file(scene_dir / "labels.json", labels);
  }
  manifest["scenes"] = scene_names;
  write_json_file(dir / "manifest.json", manifest);
}

std::vector<SweepSequence> load_dataset(const std::filesystem::path& dir, SimConfig* cfg_out) {
  const json manifest = read_json_file(dir / "manifest.json");
  if (manifest.at("schema").get<std::string>() != "rvm.dataset.v1")
    throw std::runtime_error("unexpected dataset schema in " + dir.string());
  const SimConfig cfg = sim_config_from_json(manifest.at("simulator"));
  if (cfg_out) *cfg_out = cfg;

  std::vector<SweepSequence> dataset;
  for (const auto& name : manifest.at("scenes")) {
    const std::filesystem::path scene_dir = dir / name.get<std::string>();
    SweepSequence seq;
    for (int s = 0; s < cfg.sweep_count; ++s)
      seq.sweeps.push_back(geom::load_range_image(scene_dir / sweep_file_name(s)));

    const json labels = read_json_file(scene_dir / "labels.json");
    const std::size_t pixels =
        static_cast<std::size_t>(cfg.lidar.raster.height) * cfg.lidar.raster.width;
    const auto raster = read_f32_blob(
        scene_dir / labels.at("raster_blob").get<std::string>(), pixels * 2);
    seq.pixel_class.resize(pixels);
    seq.pixel_instance.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      seq.pixel_class[p] = static_cast<int>(raster[2 * p + 0]);
      seq.pixel_instance[p] = static_cast<int>(raster[2 * p + 1]);
    }
    for (const json& actor : labels.at("actors")) {
      ActorTrack track;
      track.actor_id = actor.at("id").get<int>();
      track.class_id = actor.at("class_id").get<int>();
      track.length = actor.at("length").get<double>();
      track.width = actor.at("width").get<double>();
      track.pixel_count = actor.at("pixel_count").get<int>();
      for (const json& step : actor.at("trajectory")) {
        const auto center = step.at("center").get<std::vector<double>>();
        track.centers.emplace_back(center[0], center[1]);
        track.headings.push_back(step.at("heading").get<double>());
      }
      seq.tracks.push_back(std::move(track));
    }
    dataset.push_back(std::move(seq));
  }
  return dataset;
}

}  // namespace rvm::sim
