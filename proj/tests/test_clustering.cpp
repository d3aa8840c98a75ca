#include <doctest.h>

#include <algorithm>

#include "rvm/cluster/mean_shift.hpp"
#include "rvm/core/rng.hpp"

using namespace rvm;
using cluster::ClusterPoint;
using cluster::Detection;

namespace {

ClusterPoint make_point(const Eigen::Vector2d& center, double prob, int steps = 3) {
  ClusterPoint p;
  p.class_prob = prob;
  p.class_id = 1;
  p.trajectory.length = 4.2;
  p.trajectory.width = 1.8;
  p.trajectory.steps.resize(steps);
  for (int t = 0; t < steps; ++t) {
    auto& s = p.trajectory.steps[t];
    s.center = center + Eigen::Vector2d(0.8 * t, 0.0);
    s.heading = 0.1;
    s.corners = traj::corners_from_params(s.center, s.heading, 4.2, 1.8);
    s.scale_along = 0.2;
    s.scale_cross = 0.1;
  }
  p.center = p.trajectory.steps.front().center;
  return p;
}

// Exact flat-kernel mean-shift: iterate from a start until the weighted mean
// of in-bandwidth points stops moving.
Eigen::Vector2d exact_mode(const std::vector<ClusterPoint>& points, Eigen::Vector2d pos,
                           double bandwidth) {
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    double wsum = 0;
    for (const auto& p : points)
      if ((p.center - pos).norm() <= bandwidth) {
        acc += p.class_prob * p.center;
        wsum += p.class_prob;
      }
    const Eigen::Vector2d next = acc / wsum;
    if ((next - pos).norm() < 1e-12) return next;
    pos = next;
  }
  return pos;
}

}  // namespace

TEST_CASE("identical predictions collapse to one detection") {
  std::vector<ClusterPoint> points(25, make_point({4.0, -3.0}, 0.9));
  const auto dets = cluster::mean_shift_cluster(points, 0.5, 0.5);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].pixel_count == 25);
  CHECK(dets[0].score == doctest::Approx(0.9));
  CHECK((dets[0].trajectory.steps[0].center - Eigen::Vector2d(4.0, -3.0)).norm() < 1e-12);
  CHECK(dets[0].trajectory.length == doctest::Approx(4.2));
  CHECK(dets[0].trajectory.steps[1].center.x() == doctest::Approx(4.8));
}

TEST_CASE("distant groups stay separate") {
  std::vector<ClusterPoint> points;
  for (int i = 0; i < 10; ++i) points.push_back(make_point({0.0, 0.0}, 0.8));
  for (int i = 0; i < 10; ++i) points.push_back(make_point({25.0, 0.0}, 0.7));
  const auto dets = cluster::mean_shift_cluster(points, 0.5, 0.5);
  CHECK(dets.size() == 2);
}

TEST_CASE("threshold filters points and empty input yields empty output") {
  CHECK(cluster::mean_shift_cluster({}, 0.5, 0.5).empty());
  std::vector<ClusterPoint> points = {make_point({0, 0}, 0.2), make_point({0, 0}, 0.1)};
  CHECK(cluster::mean_shift_cluster(points, 0.5, 0.5).empty());
}

TEST_CASE("tight cloud matches the exact mean-shift oracle") {
  Rng rng(1);
  const double bandwidth = 0.5;
  std::vector<ClusterPoint> points;
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  double wsum = 0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d c =
        Eigen::Vector2d(7.0, 2.0) +
        0.1 * bandwidth * Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double prob = rng.uniform(0.5, 1.0);
    points.push_back(make_point(c, prob));
    acc += prob * c;
    wsum += prob;
  }
  const Eigen::Vector2d weighted_mean = acc / wsum;
  const auto dets = cluster::mean_shift_cluster(points, bandwidth, 0.3);
  REQUIRE(dets.size() == 1);
  CHECK((dets[0].trajectory.steps[0].center - weighted_mean).norm() < 1e-6);
  const Eigen::Vector2d oracle = exact_mode(points, points[0].center, bandwidth);
  CHECK((dets[0].trajectory.steps[0].center - oracle).norm() < 1e-6);
}

TEST_CASE("output does not depend on input order") {
  Rng rng(2);
  std::vector<ClusterPoint> points;
  for (int g = 0; g < 4; ++g) {
    const Eigen::Vector2d base(6.0 * g, -3.0 * g);
    for (int i = 0; i < 20; ++i)
      points.push_back(make_point(
          base + 0.2 * Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1)),
          rng.uniform(0.4, 1.0)));
  }
  const auto sorted_dets = cluster::mean_shift_cluster(points, 0.5, 0.3);

  std::vector<ClusterPoint> shuffled = points;
  for (int i = int(shuffled.size()) - 1; i > 0; --i)
    std::swap(shuffled[i], shuffled[rng.uniform_int(0, i)]);
  const auto shuffled_dets = cluster::mean_shift_cluster(shuffled, 0.5, 0.3);

  REQUIRE(sorted_dets.size() == shuffled_dets.size());
  for (std::size_t i = 0; i < sorted_dets.size(); ++i) {
    CHECK(sorted_dets[i].score == shuffled_dets[i].score);
    CHECK(sorted_dets[i].pixel_count == shuffled_dets[i].pixel_count);
    CHECK((sorted_dets[i].trajectory.steps[0].center -
           shuffled_dets[i].trajectory.steps[0].center)
              .norm() == 0.0);
  }
}

TEST_CASE("translation equivariance with a translated grid origin") {
  Rng rng(3);
  std::vector<ClusterPoint> points;
  for (int i = 0; i < 40; ++i)
    points.push_back(make_point(
        Eigen::Vector2d(rng.uniform(-10, 10), rng.uniform(-10, 10)), rng.uniform(0.4, 1.0)));
  const Eigen::Vector2d v(3.7, -1.3);
  std::vector<ClusterPoint> moved = points;
  for (auto& p : moved) {
    p.center += v;
    for (auto& s : p.trajectory.steps) s.center += v;
  }
  const auto base = cluster::mean_shift_cluster(points, 0.5, 0.3, {0, 0});
  const auto shifted = cluster::mean_shift_cluster(moved, 0.5, 0.3, v);
  REQUIRE(base.size() == shifted.size());
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK((shifted[i].trajectory.steps[0].center - base[i].trajectory.steps[0].center - v).norm() <
          1e-9);
}

TEST_CASE("every detection center stays within a bandwidth of its support") {
  Rng rng(4);
  const double bandwidth = 0.5;
  std::vector<ClusterPoint> points;
  for (int i = 0; i < 300; ++i)
    points.push_back(make_point(
        Eigen::Vector2d(rng.uniform(-20, 20), rng.uniform(-20, 20)), rng.uniform(0.31, 1.0)));
  const auto dets = cluster::mean_shift_cluster(points, bandwidth, 0.3);
  REQUIRE(!dets.empty());
  for (const auto& d : dets) {
    double nearest = 1e9;
    for (const auto& p : points)
      nearest = std::min(nearest, (p.center - d.trajectory.steps[0].center).norm());
    CHECK(nearest <= bandwidth + 1e-9);
  }
}

TEST_CASE("non-maximum suppression keeps the higher score") {
  std::vector<Detection> dets;
  Detection a;
  a.score = 0.9;
  a.class_id = 1;
  a.pixel_count = 10;
  a.trajectory = make_point({0, 0}, 0.9).trajectory;
  Detection b = a;
  b.score = 0.6;
  b.trajectory = make_point({0.3, 0.1}, 0.6).trajectory;
  Detection c = a;
  c.score = 0.7;
  c.trajectory = make_point({30, 0}, 0.7).trajectory;
  dets = {b, c, a};
  const auto kept = cluster::suppress_overlaps(dets, 0.1);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].score == doctest::Approx(0.9));
  CHECK(kept[1].score == doctest::Approx(0.7));
}
