#include "rvm/pipeline/sample.hpp"

#include <numbers>

namespace rvm::pipeline {

geom::RangeImage reproject_range_image(const geom::RangeImage& prev, const geom::Pose& target_pose,
                                       const geom::RasterConfig& cfg) {
  std::vector<geom::LidarPoint> points;
  points.reserve(static_cast<std::size_t>(prev.config.height) * prev.config.width / 4);
  const geom::Pose relative = geom::compose(target_pose, geom::inverse(prev.pose));
  const bool with_map = prev.channel_count() > 3;
  for (int row = 0; row < prev.config.height; ++row) {
    for (int col = 0; col < prev.config.width; ++col) {
      if (!prev.valid(row, col)) continue;
      const Eigen::Vector3d transformed = relative.apply(prev.point(row, col));
      if (transformed.norm() <= 0.0) continue;
      geom::LidarPoint p;
      p.coord = geom::cartesian_to_spherical(transformed);
      p.reflectance = prev.at(row, col, geom::RangeImage::kReflectance);
      if (with_map) {
        p.height_above_ground = prev.at(row, col, geom::RangeImage::kHeightAboveGround);
        p.road_flag = prev.at(row, col, geom::RangeImage::kRoadFlag);
      }
      points.push_back(p);
    }
  }
  geom::RangeImage out =
      geom::build_range_image(points, cfg, target_pose, prev.sweep_index, with_map);
  return out;
}

FrameTargets make_frame_targets(const sim::SweepSequence& seq) {
  FrameTargets targets;
  targets.labels = seq.pixel_class;

  // Two target variants per track: as-annotated and heading-flipped by pi.
  // A pixel picks the variant whose t=0 heading lies within a quarter turn of
  // the pixel azimuth, which is the only branch the decoder can emit.
  targets.targets.resize(seq.tracks.size() * 2);
  for (std::size_t i = 0; i < seq.tracks.size(); ++i) {
    const sim::ActorTrack& track = seq.tracks[i];
    loss::TrajectoryTarget& base = targets.targets[2 * i];
    base.length = track.length;
    base.width = track.width;
    base.centers = track.centers;
    base.headings = track.headings;
    loss::TrajectoryTarget& flipped = targets.targets[2 * i + 1];
    flipped = base;
    for (double& h : flipped.headings) h += std::numbers::pi;
    targets.object_count += track.pixel_count > 0 ? 1 : 0;
  }

  const geom::RangeImage& current = seq.current();
  const geom::RasterConfig& cfg = current.config;
  for (int row = 0; row < cfg.height; ++row) {
    for (int col = 0; col < cfg.width; ++col) {
      const int pixel = row * cfg.width + col;
      const int track_index = seq.pixel_instance[pixel];
      if (track_index < 0) continue;
      const sim::ActorTrack& track = seq.tracks[track_index];
      PixelTarget pt;
      pt.pixel = pixel;
      const Eigen::Vector3d point = current.point(row, col);
      pt.point = {point.x(), point.y(), cfg.col_to_azimuth(col)};
      const double rel = geom::wrap_angle(track.headings[0] - pt.point.azimuth);
      const bool flip = rel <= -std::numbers::pi / 2 || rel > std::numbers::pi / 2;
      pt.target_index = 2 * track_index + (flip ? 1 : 0);
      pt.weight = 1.0 / double(track.pixel_count);
      targets.pixels.push_back(pt);
    }
  }
  return targets;
}

}  // namespace rvm::pipeline
