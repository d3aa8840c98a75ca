#include <doctest.h>

#include <numbers>

#include "rvm/core/rng.hpp"
#include "rvm/eval/calibration.hpp"
#include "rvm/eval/iou.hpp"
#include "rvm/eval/metrics.hpp"
#include "rvm/traj/decode.hpp"

using namespace rvm;
using eval::EvalDetection;
using eval::EvalGroundTruth;
using eval::Quad;

namespace {
constexpr double kPi = std::numbers::pi;

Quad box(double cx, double cy, double heading, double l, double w) {
  return traj::corners_from_params({cx, cy}, heading, l, w);
}

// Monte-Carlo IoU oracle over the joint bounding rectangle.
double mc_iou(const Quad& a, const Quad& b, int samples, Rng& rng) {
  auto inside = [](const Quad& q, const Eigen::Vector2d& p) {
    const auto poly = eval::to_ccw(q);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& s = poly[i];
      const auto& t = poly[(i + 1) % poly.size()];
      if ((t.x() - s.x()) * (p.y() - s.y()) - (t.y() - s.y()) * (p.x() - s.x()) < 0) return false;
    }
    return true;
  };
  double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
  for (const auto& q : {a, b})
    for (const auto& c : q) {
      lo_x = std::min(lo_x, c.x());
      hi_x = std::max(hi_x, c.x());
      lo_y = std::min(lo_y, c.y());
      hi_y = std::max(hi_y, c.y());
    }
  long in_both = 0, in_either = 0;
  for (int i = 0; i < samples; ++i) {
    const Eigen::Vector2d p(rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y));
    const bool ia = inside(a, p), ib = inside(b, p);
    if (ia && ib) ++in_both;
    if (ia || ib) ++in_either;
  }
  return in_either == 0 ? 0.0 : double(in_both) / double(in_either);
}

traj::BoxTrajectory fixed_trajectory(double cx, double cy, double heading, double l, double w,
                                     int steps = 7, const Eigen::Vector2d& velocity = {0, 0}) {
  traj::BoxTrajectory t;
  t.length = l;
  t.width = w;
  t.steps.resize(steps);
  for (int i = 0; i < steps; ++i) {
    auto& s = t.steps[i];
    s.center = Eigen::Vector2d(cx, cy) + i * velocity;
    s.heading = heading;
    s.corners = traj::corners_from_params(s.center, heading, l, w);
    s.scale_along = s.scale_cross = 0.5;
  }
  return t;
}

EvalDetection det(int frame, double score, const traj::BoxTrajectory& t) {
  return {frame, 1, score, t};
}
EvalGroundTruth gt(int frame, const traj::BoxTrajectory& t) { return {frame, 1, t}; }
}  // namespace

TEST_CASE("rotated_iou basics") {
  const Quad a = box(0, 0, 0, 2, 2);
  SUBCASE("identical boxes give one") { CHECK(eval::rotated_iou(a, a) == doctest::Approx(1.0)); }
  SUBCASE("disjoint boxes give zero") {
    CHECK(eval::rotated_iou(a, box(10, 10, 0.3, 2, 2)) == doctest::Approx(0.0));
  }
  SUBCASE("unit offset squares give one third") {
    const Quad b = box(1, 0, 0, 2, 2);
    const double iou = eval::rotated_iou(a, b);
    CHECK(iou == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    Rng rng(1);
    CHECK(std::abs(iou - mc_iou(a, b, 10000000, rng)) < 1e-3);
  }
  SUBCASE("degenerate zero-area box gives zero") {
    CHECK(eval::rotated_iou(a, box(0, 0, 0.4, 0.0, 2)) == 0.0);
  }
}

TEST_CASE("rotated_iou random boxes against the Monte-Carlo oracle") {
  Rng rng(2);
  for (int i = 0; i < 25; ++i) {
    const Quad a = box(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-kPi, kPi),
                       rng.uniform(1, 5), rng.uniform(1, 3));
    const Quad b = box(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-kPi, kPi),
                       rng.uniform(1, 5), rng.uniform(1, 3));
    const double exact = eval::rotated_iou(a, b);
    CHECK(eval::rotated_iou(b, a) == doctest::Approx(exact).epsilon(1e-12));
    Rng mc_rng = rng.fork(i);
    CHECK(std::abs(exact - mc_iou(a, b, 2000000, mc_rng)) < 2e-3);
  }
}

TEST_CASE("rotated_iou is invariant under a shared rigid motion") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Quad a = box(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-kPi, kPi),
                       rng.uniform(1, 5), rng.uniform(1, 3));
    const Quad b = box(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-kPi, kPi),
                       rng.uniform(1, 5), rng.uniform(1, 3));
    const double base = eval::rotated_iou(a, b);
    const double psi = rng.uniform(-kPi, kPi);
    const Eigen::Vector2d shift(rng.uniform(-10, 10), rng.uniform(-10, 10));
    const Eigen::Matrix2d r = geom::rotation2(psi);
    Quad ra = a, rb = b;
    for (int k = 0; k < 4; ++k) {
      ra[k] = r * a[k] + shift;
      rb[k] = r * b[k] + shift;
    }
    CHECK(eval::rotated_iou(ra, rb) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("average precision") {
  const auto t_near = fixed_trajectory(0, 0, 0, 4, 2);
  const auto t_far = fixed_trajectory(20, 0, 0, 4, 2);
  SUBCASE("perfect detections give one") {
    std::vector<EvalDetection> dets = {det(0, 0.9, t_near), det(1, 0.8, t_far)};
    std::vector<EvalGroundTruth> gts = {gt(0, t_near), gt(1, t_far)};
    CHECK(eval::average_precision(dets, gts, 0.7) == doctest::Approx(1.0));
  }
  SUBCASE("no detections give zero") {
    std::vector<EvalGroundTruth> gts = {gt(0, t_near)};
    CHECK(eval::average_precision({}, gts, 0.7) == doctest::Approx(0.0));
  }
  SUBCASE("zero ground truths are an error") {
    std::vector<EvalDetection> dets = {det(0, 0.9, t_near)};
    CHECK_THROWS_AS(eval::average_precision(dets, {}, 0.7), std::invalid_argument);
  }
  SUBCASE("hand-computed interpolated curve") {
    // 2 ground truths; detections scored 0.9 (TP), 0.8 (FP), 0.7 (TP)
    const auto t_miss = fixed_trajectory(10, 10, 0, 4, 2);
    std::vector<EvalDetection> dets = {det(0, 0.9, t_near), det(0, 0.8, t_miss),
                                       det(1, 0.7, t_far)};
    std::vector<EvalGroundTruth> gts = {gt(0, t_near), gt(1, t_far)};
    CHECK(eval::average_precision(dets, gts, 0.7) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  }
  SUBCASE("invariant to strictly monotone score transforms") {
    Rng rng(4);
    std::vector<EvalDetection> dets;
    std::vector<EvalGroundTruth> gts;
    for (int f = 0; f < 6; ++f) {
      const auto truth = fixed_trajectory(rng.uniform(-10, 10), rng.uniform(-10, 10), 0.3, 4, 2);
      gts.push_back(gt(f, truth));
      const auto offset = fixed_trajectory(truth.steps[0].center.x() + rng.uniform(0, 2),
                                           truth.steps[0].center.y(), 0.3, 4, 2);
      dets.push_back(det(f, rng.uniform(0.1, 0.9), offset));
      if (f % 2 == 0)
        dets.push_back(det(f, rng.uniform(0.1, 0.9), fixed_trajectory(50, 50, 0, 4, 2)));
    }
    const double base = eval::average_precision(dets, gts, 0.3);
    std::vector<EvalDetection> warped = dets;
    for (auto& d : warped) d.score = std::exp(3.0 * d.score) - 0.5;
    CHECK(eval::average_precision(warped, gts, 0.3) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("l2 at fixed recall") {
  SUBCASE("perfect predictions have zero error") {
    std::vector<EvalDetection> dets;
    std::vector<EvalGroundTruth> gts;
    for (int f = 0; f < 5; ++f) {
      const auto t = fixed_trajectory(3.0 * f, -f, 0.2, 4, 2, 7, {0.5, 0.1});
      dets.push_back(det(f, 0.9, t));
      gts.push_back(gt(f, t));
    }
    const auto result = eval::l2_at_recall(dets, gts, 0.8, 0.5);
    for (double v : result.per_step_m) CHECK(v == doctest::Approx(0.0));
    CHECK(result.achieved_recall >= 0.8);
  }
  SUBCASE("a fixed 0.3-0.4 offset is half a meter at every step") {
    std::vector<EvalDetection> dets;
    std::vector<EvalGroundTruth> gts;
    for (int f = 0; f < 5; ++f) {
      auto t = fixed_trajectory(4.0 * f, 2.0 * f, 0.0, 4.4, 2, 7, {0.3, 0.0});
      gts.push_back(gt(f, t));
      for (auto& s : t.steps) {
        s.center += Eigen::Vector2d(0.30, 0.40);
        s.corners = traj::corners_from_params(s.center, s.heading, 4.4, 2);
      }
      dets.push_back(det(f, 0.9, t));
    }
    const auto result = eval::l2_at_recall(dets, gts, 0.8, 0.5);
    for (double v : result.per_step_m) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("matches an exhaustive threshold sweep") {
    Rng rng(5);
    // mixed-quality detections across 4 frames, <= 10 detections
    std::vector<EvalGroundTruth> gts;
    std::vector<EvalDetection> dets;
    for (int f = 0; f < 4; ++f) {
      const auto t = fixed_trajectory(6.0 * f, 0, 0.1, 4, 2);
      gts.push_back(gt(f, t));
      auto good = t;
      dets.push_back(det(f, rng.uniform(0.3, 1.0), good));
      if (f % 2 == 0) dets.push_back(det(f, rng.uniform(0.3, 1.0), fixed_trajectory(40, 40, 0, 4, 2)));
    }
    const auto fast = eval::l2_at_recall(dets, gts, 0.75, 0.5);

    // oracle: try every candidate threshold from the score set, highest first
    std::vector<double> scores;
    for (const auto& d : dets) scores.push_back(d.score);
    std::sort(scores.rbegin(), scores.rend());
    double chosen = -1;
    for (double tau : scores) {
      std::vector<EvalDetection> subset;
      for (const auto& d : dets)
        if (d.score >= tau) subset.push_back(d);
      int tp = 0;
      std::vector<bool> taken(gts.size(), false);
      std::sort(subset.begin(), subset.end(),
                [](const auto& a, const auto& b) { return a.score > b.score; });
      for (const auto& d : subset)
        for (std::size_t g = 0; g < gts.size(); ++g) {
          if (taken[g] || gts[g].frame != d.frame) continue;
          if (eval::rotated_iou(d.trajectory.steps[0].corners, gts[g].trajectory.steps[0].corners) >=
              0.5) {
            taken[g] = true;
            ++tp;
            break;
          }
        }
      if (double(tp) / gts.size() >= 0.75) {
        chosen = tau;
        break;
      }
    }
    REQUIRE(chosen > 0);
    CHECK(fast.score_threshold == doctest::Approx(chosen));
  }
  SUBCASE("unreachable recall names the maximum achievable") {
    std::vector<EvalGroundTruth> gts = {gt(0, fixed_trajectory(0, 0, 0, 4, 2)),
                                        gt(1, fixed_trajectory(5, 5, 0, 4, 2))};
    std::vector<EvalDetection> dets = {det(0, 0.9, fixed_trajectory(0, 0, 0, 4, 2))};
    CHECK_THROWS_AS(eval::l2_at_recall(dets, gts, 0.8, 0.5), eval::RecallUnreachable);
    try {
      eval::l2_at_recall(dets, gts, 0.8, 0.5);
    } catch (const eval::RecallUnreachable& e) {
      CHECK(e.max_recall == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("calibration curves") {
  Rng rng(6);
  SUBCASE("samples drawn from the predicted distribution follow the diagonal") {
    std::vector<eval::CalibrationSample> samples;
    for (int i = 0; i < 100000; ++i) {
      const double mu = rng.uniform(-5, 5);
      const double b = rng.uniform(0.1, 2.0);
      samples.push_back({mu, b, rng.laplace(mu, b)});
    }
    const auto curve = eval::calibration_curve(samples);
    CHECK(eval::max_diagonal_deviation(curve) < 0.02);
    // observed fractions are monotone by construction
    for (std::size_t i = 1; i < curve.observed.size(); ++i)
      CHECK(curve.observed[i] >= curve.observed[i - 1]);
  }
  SUBCASE("overstated scale crosses the diagonal and is detected") {
    std::vector<eval::CalibrationSample> samples;
    for (int i = 0; i < 100000; ++i) {
      const double mu = rng.uniform(-5, 5);
      const double b = rng.uniform(0.1, 2.0);
      samples.push_back({mu, 2.0 * b, rng.laplace(mu, b)});
    }
    const auto curve = eval::calibration_curve(samples);
    CHECK(eval::max_diagonal_deviation(curve) > 0.05);
    // mass concentrates toward the middle: under-counted below one half,
    // over-counted above
    CHECK(curve.observed[4] < curve.expected[4]);   // p = 0.25
    CHECK(curve.observed[14] > curve.expected[14]); // p = 0.75
  }
  SUBCASE("understated scale pushes mass to the edges") {
    std::vector<eval::CalibrationSample> samples;
    for (int i = 0; i < 100000; ++i) {
      const double mu = rng.uniform(-5, 5);
      const double b = rng.uniform(0.1, 2.0);
      samples.push_back({mu, 0.5 * b, rng.laplace(mu, b)});
    }
    const auto curve = eval::calibration_curve(samples);
    CHECK(eval::max_diagonal_deviation(curve) > 0.05);
    CHECK(curve.observed[0] > curve.expected[0]);   // p = 0.05
    CHECK(curve.observed[14] < curve.expected[14]);
  }
}
