#include <doctest.h>

#include <numbers>

#include "rvm/core/rng.hpp"
#include "rvm/loss/curriculum.hpp"
#include "rvm/loss/focal.hpp"
#include "rvm/loss/laplace.hpp"
#include "rvm/loss/regression.hpp"

using namespace rvm;
using loss::CurriculumMode;
using loss::CurriculumState;
using loss::LossConfig;
using loss::TrajectoryTarget;

namespace {
constexpr double kPi = std::numbers::pi;

double laplace_pdf(double x, double mu, double b) {
  return std::exp(-std::abs(x - mu) / b) / (2 * b);
}

// Quadrature oracle for KL(p || q): midpoint rule over a wide support with
// 1e6 points, accurate to well under 1e-6 for the scales exercised here.
double kl_quadrature(double mu_p, double b_p, double mu_q, double b_q) {
  const double lo = std::min(mu_p, mu_q) - 40.0 * std::max(b_p, b_q);
  const double hi = std::max(mu_p, mu_q) + 40.0 * std::max(b_p, b_q);
  const int n = 1000000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * h;
    const double p = laplace_pdf(x, mu_p, b_p);
    if (p <= 0) continue;
    acc += p * std::log(p / laplace_pdf(x, mu_q, b_q));
  }
  return acc * h;
}

// Independent ground-truth corner construction for the regression head.
struct DecodedPixel {
  std::vector<Eigen::Vector2d> centers;
  std::vector<double> headings;
};

TrajectoryTarget make_target(int steps, Rng& rng, double azimuth) {
  TrajectoryTarget t;
  t.length = rng.uniform(3.5, 5.0);
  t.width = rng.uniform(1.6, 2.1);
  double heading = azimuth + rng.uniform(-1.2, 1.2);
  Eigen::Vector2d c(rng.uniform(-20, 20), rng.uniform(-20, 20));
  for (int i = 0; i < steps; ++i) {
    t.centers.push_back(c);
    t.headings.push_back(heading);
    c += Eigen::Vector2d(rng.uniform(-2, 2), rng.uniform(-2, 2));
    heading += rng.uniform(-0.2, 0.2);
  }
  return t;
}

std::vector<double> random_channels(int steps, Rng& rng) {
  std::vector<double> ch(loss::reg::channel_count(steps - 1));
  ch[loss::reg::kLength] = rng.uniform(3.0, 5.5);
  ch[loss::reg::kWidth] = rng.uniform(1.4, 2.3);
  for (int t = 0; t < steps; ++t) {
    const int base = loss::reg::base(t);
    ch[base + 0] = rng.uniform(-2, 2);
    ch[base + 1] = rng.uniform(-2, 2);
    const double a = rng.uniform(-1.4, 1.4);
    ch[base + 2] = std::cos(a) * rng.uniform(0.5, 1.5);
    ch[base + 3] = std::sin(a) * rng.uniform(0.5, 1.5);
    ch[base + 4] = rng.uniform(-1.5, 0.5);
    ch[base + 5] = rng.uniform(-1.5, 0.5);
  }
  return ch;
}
}  // namespace

TEST_CASE("focal loss values") {
  SUBCASE("perfect prediction gives zero loss") {
    net::Tensor<double> logits(1, 1, 2);
    logits.data = {50.0, -50.0};
    const std::vector<int> labels = {0};
    CHECK(loss::focal_loss<double>(logits, std::span<const int>(labels), 2.0, nullptr) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("gamma 0 is mean cross entropy") {
    net::Tensor<double> logits(1, 1, 2);
    logits.data = {0.0, 0.0};  // p = 0.5 each
    const std::vector<int> labels = {1};
    CHECK(loss::focal_loss<double>(logits, std::span<const int>(labels), 0.0, nullptr) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("gamma 2 scales by the squared complement") {
    net::Tensor<double> logits(1, 1, 2);
    logits.data = {0.0, 0.0};
    const std::vector<int> labels = {1};
    CHECK(loss::focal_loss<double>(logits, std::span<const int>(labels), 2.0, nullptr) ==
          doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("mean is over all pixels") {
    net::Tensor<double> logits(2, 2, 2);
    logits.fill(0.0);
    const std::vector<int> labels = {0, 1, 0, 1};
    CHECK(loss::focal_loss<double>(logits, std::span<const int>(labels), 0.0, nullptr) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("vanishing probability is clamped and counted") {
    net::Tensor<double> logits(1, 1, 2);
    logits.data = {-60.0, 60.0};
    const std::vector<int> labels = {0};
    std::int64_t clamped = 0;
    const double value = loss::focal_loss<double>(logits, std::span<const int>(labels), 2.0, nullptr, &clamped);
    CHECK(clamped == 1);
    CHECK(std::isfinite(value));
  }
}

TEST_CASE("focal loss gradient matches finite differences") {
  Rng rng(1);
  for (double gamma : {0.0, 1.0, 2.0}) {
    net::Tensor<double> logits(2, 3, 3);
    for (auto& v : logits.data) v = rng.uniform(-2, 2);
    std::vector<int> labels(6);
    for (auto& l : labels) l = rng.uniform_int(0, 2);

    net::Tensor<double> grad(2, 3, 3);
    loss::focal_loss<double>(logits, std::span<const int>(labels), gamma, &grad);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double keep = logits.data[i];
      logits.data[i] = keep + eps;
      const double hi = loss::focal_loss<double>(logits, std::span<const int>(labels), gamma, nullptr);
      logits.data[i] = keep - eps;
      const double lo = loss::focal_loss<double>(logits, std::span<const int>(labels), gamma, nullptr);
      logits.data[i] = keep;
      const double fd = (hi - lo) / (2 * eps);
      CHECK(std::abs(fd - grad.data[i]) < 1e-7);
    }
  }
}

TEST_CASE("laplace_kl closed form matches quadrature") {
  CHECK(loss::laplace_kl(0.0, 1.0, 0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  // (0, 1, 0, e): log e + 1/e - 1 = 1/e
  const double kl_scale = loss::laplace_kl(0.0, 1.0, 0.0, std::numbers::e);
  CHECK(kl_scale == doctest::Approx(1.0 / std::numbers::e).epsilon(1e-12));
  CHECK(kl_scale == doctest::Approx(kl_quadrature(0, 1, 0, std::numbers::e)).epsilon(1e-6));
  // (0, 1, 1, 1): exp(-1)
  const double kl_shift = loss::laplace_kl(0.0, 1.0, 1.0, 1.0);
  CHECK(kl_shift == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(std::abs(kl_shift - kl_quadrature(0, 1, 1, 1)) < 1e-6);
  // a couple of random cases against quadrature
  Rng rng(2);
  for (int i = 0; i < 5; ++i) {
    const double mu_p = rng.uniform(-2, 2), b_p = rng.uniform(0.3, 2.5);
    const double mu_q = rng.uniform(-2, 2), b_q = rng.uniform(0.3, 2.5);
    CHECK(std::abs(loss::laplace_kl(mu_p, b_p, mu_q, b_q) - kl_quadrature(mu_p, b_p, mu_q, b_q)) <
          1e-6);
  }
  CHECK_THROWS_AS(loss::laplace_kl(0.0, 0.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(loss::laplace_kl(0.0, 1.0, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("laplace_kl nonnegativity and identity over random parameters") {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double mu_p = rng.uniform(-5, 5), b_p = rng.uniform(0.05, 4.0);
    const double mu_q = rng.uniform(-5, 5), b_q = rng.uniform(0.05, 4.0);
    const double kl = loss::laplace_kl(mu_p, b_p, mu_q, b_q);
    CHECK(kl >= -1e-12);
    if (mu_p == mu_q && b_p == b_q) CHECK(kl == doctest::Approx(0.0));
  }
  CHECK(loss::laplace_kl(1.3, 0.7, 1.3, 0.7) == doctest::Approx(0.0).epsilon(1e-15));
  // zero only at identity: a nonzero perturbation must give a positive value
  for (int i = 0; i < 1000; ++i) {
    const double mu = rng.uniform(-5, 5), b = rng.uniform(0.05, 4.0);
    const double dmu = rng.uniform(0.01, 1.0), db = rng.uniform(0.01, 1.0);
    CHECK(loss::laplace_kl(mu, b, mu + dmu, b) > 0.0);
    CHECK(loss::laplace_kl(mu, b, mu, b + db) > 0.0);
  }
}

TEST_CASE("laplace_kl_dmu matches finite differences") {
  CHECK(loss::laplace_kl_dmu(0.0, 1.0, 0.0, 1.0) == 0.0);
  CHECK(loss::laplace_kl_dmu(0.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  // large residual limit approaches 1/b
  CHECK(loss::laplace_kl_dmu(0.0, 0.2, 50.0, 2.0) == doctest::Approx(0.5).epsilon(1e-9));
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const double mu_p = rng.uniform(-3, 3), b_p = rng.uniform(0.1, 3.0);
    double mu_q = rng.uniform(-3, 3);
    if (std::abs(mu_q - mu_p) < 1e-3) mu_q += 0.01;  // keep away from the kink
    const double b_q = rng.uniform(0.1, 3.0);
    const double eps = 1e-6;
    const double fd = (loss::laplace_kl(mu_p, b_p, mu_q + eps, b_q) -
                       loss::laplace_kl(mu_p, b_p, mu_q - eps, b_q)) /
                      (2 * eps);
    CHECK(std::abs(loss::laplace_kl_dmu(mu_p, b_p, mu_q, b_q) - fd) < 1e-6);
  }
}

TEST_CASE("laplace_kl_dmu magnitude bound, sign, and ordering in the ground-truth scale") {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double mu_p = rng.uniform(-3, 3), b_p = rng.uniform(0.05, 3.0);
    const double mu_q = rng.uniform(-3, 3), b_q = rng.uniform(0.05, 3.0);
    const double d = loss::laplace_kl_dmu(mu_p, b_p, mu_q, b_q);
    CHECK(std::abs(d) < 1.0 / b_q + 1e-12);
    if (mu_q > mu_p) CHECK(d >= 0.0);
    if (mu_q < mu_p) CHECK(d <= 0.0);
    // increasing the ground-truth scale never increases the magnitude
    const double wider = loss::laplace_kl_dmu(mu_p, b_p * 1.5, mu_q, b_q);
    CHECK(std::abs(wider) <= std::abs(d) + 1e-12);
  }
}

TEST_CASE("curriculum scale endpoints and schedule") {
  LossConfig cfg;  // eta = 1, epsilon = 0.05
  const int T = 6;
  SUBCASE("t = 0 pins to the floor at any iteration") {
    for (int k : {0, 10, 500, 100000}) {
      const CurriculumState st = CurriculumState::at(k, 1000, cfg);
      CHECK(loss::curriculum_scale(0, T, cfg, st) == doctest::Approx(0.05).epsilon(1e-12));
    }
  }
  SUBCASE("t = T at the start is eta + epsilon") {
    const CurriculumState st = CurriculumState::at(0, 1000, cfg);
    CHECK(loss::curriculum_scale(T, T, cfg, st) == doctest::Approx(1.05).epsilon(1e-12));
  }
  SUBCASE("alpha one half mixes the endpoints") {
    CurriculumState st;
    st.iteration = 1;
    st.total_iterations = 2;
    st.beta = std::log(2.0);
    CHECK(st.alpha() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(loss::curriculum_scale(T, T, cfg, st) == doctest::Approx(0.55).epsilon(1e-12));
  }
  SUBCASE("monotone in t, decaying in k, limiting to the floor") {
    for (int k : {0, 50, 200, 1000}) {
      const CurriculumState st = CurriculumState::at(k, 1000, cfg);
      double prev = 0.0;
      for (int t = 0; t <= T; ++t) {
        const double b = loss::curriculum_scale(t, T, cfg, st);
        CHECK(b >= prev - 1e-15);
        CHECK(b >= cfg.epsilon - 1e-15);
        CHECK(b <= cfg.eta + cfg.epsilon + 1e-15);
        prev = b;
      }
    }
    for (int t = 0; t <= T; ++t) {
      double prev = 10.0;
      for (int k : {0, 100, 400, 900}) {
        const CurriculumState st = CurriculumState::at(k, 1000, cfg);
        const double b = loss::curriculum_scale(t, T, cfg, st);
        CHECK(b <= prev + 1e-15);
        prev = b;
      }
      const CurriculumState late = CurriculumState::at(1000000, 1000, cfg);
      CHECK(loss::curriculum_scale(t, T, cfg, late) == doctest::Approx(cfg.epsilon).epsilon(1e-9));
    }
  }
  SUBCASE("default beta reaches 1e-3 halfway through training") {
    const CurriculumState st = CurriculumState::at(500, 1000, cfg);
    CHECK(st.alpha() == doctest::Approx(1e-3).epsilon(1e-9));
  }
}

TEST_CASE("regression loss exact zeros and closed-form values") {
  const int steps = 4;
  Rng rng(6);
  const traj::BevPoint point{6.0, -2.0, 0.4};
  TrajectoryTarget target = make_target(steps, rng, point.azimuth);

  // Channels that decode exactly to the target.
  std::vector<double> ch(loss::reg::channel_count(steps - 1), 0.0);
  ch[loss::reg::kLength] = target.length;
  ch[loss::reg::kWidth] = target.width;
  const Eigen::Matrix2d rt = geom::rotation2(point.azimuth).transpose();
  Eigen::Vector2d prev_c(point.x, point.y);
  double prev_phi = point.azimuth;
  for (int t = 0; t < steps; ++t) {
    const int base = loss::reg::base(t);
    const Eigen::Vector2d d = rt * (target.centers[t] - prev_c);
    ch[base + 0] = d.x();
    ch[base + 1] = d.y();
    const double da = target.headings[t] - prev_phi;
    ch[base + 2] = std::cos(2 * da);
    ch[base + 3] = std::sin(2 * da);
    prev_c = target.centers[t];
    prev_phi = target.headings[t];
  }

  std::vector<double> scale_gt(steps, 0.3);
  const std::vector<double> weights(steps, 1.0);

  SUBCASE("prediction equal to target with matching scales is zero") {
    for (int t = 0; t < steps; ++t) {
      ch[loss::reg::base(t) + 4] = std::log(scale_gt[t]);
      ch[loss::reg::base(t) + 5] = std::log(scale_gt[t]);
    }
    const double value = loss::pixel_regression_loss<double>(
        ch, point, target, scale_gt, weights, false, 1.0, {});
    CHECK(value == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("doubling the predicted scale with zero residual costs log2 - 1/2 per dim") {
    for (int t = 0; t < steps; ++t) {
      ch[loss::reg::base(t) + 4] = std::log(2 * scale_gt[t]);
      ch[loss::reg::base(t) + 5] = std::log(2 * scale_gt[t]);
    }
    const double value = loss::pixel_regression_loss<double>(
        ch, point, target, scale_gt, weights, false, 1.0, {});
    const double per_dim = std::log(2.0) + 0.5 - 1.0;
    CHECK(value == doctest::Approx(steps * 8 * per_dim).epsilon(1e-9));
    // the mean form divides by (T+1) N D
    loss::RegressionSample<double> sample;
    sample.channels = std::span<const double>(ch);
    sample.point = point;
    sample.target = &target;
    sample.pixel_weight = 1.0;
    std::vector samples{sample};
    const double mean = loss::regression_loss(std::span<loss::RegressionSample<double>>(samples), 1,
                                              steps - 1, scale_gt, weights, false);
    CHECK(mean == doctest::Approx(per_dim).epsilon(1e-9));
  }
}

TEST_CASE("regression loss gradient matches finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int steps = 2 + rng.uniform_int(0, 3);
    const traj::BevPoint point{rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(-kPi, kPi)};
    const TrajectoryTarget target = make_target(steps, rng, point.azimuth);
    std::vector<double> ch = random_channels(steps, rng);
    std::vector<double> scale_gt(steps), weights(steps);
    for (int t = 0; t < steps; ++t) {
      scale_gt[t] = rng.uniform(0.05, 1.0);
      weights[t] = rng.uniform(0.2, 2.0);
    }
    const bool l1 = trial % 4 == 3;
    const double scale = rng.uniform(0.1, 2.0);

    std::vector<double> grad(ch.size(), 0.0);
    const double base_value = loss::pixel_regression_loss<double>(
        ch, point, target, scale_gt, weights, l1, scale, std::span<double>(grad));
    const double eps = 1e-6;
    // absolute floor covers the cancellation noise of differencing a loss of
    // this magnitude at this step size
    const double noise = 1e-8 * std::max(1.0, std::abs(base_value));
    for (std::size_t i = 0; i < ch.size(); ++i) {
      const double keep = ch[i];
      ch[i] = keep + eps;
      const double hi = loss::pixel_regression_loss<double>(ch, point, target, scale_gt, weights,
                                                            l1, scale, {});
      ch[i] = keep - eps;
      const double lo = loss::pixel_regression_loss<double>(ch, point, target, scale_gt, weights,
                                                            l1, scale, {});
      ch[i] = keep;
      const double fd = (hi - lo) / (2 * eps);
      CHECK(std::abs(fd - grad[i]) <= 1e-4 * std::max(std::abs(fd), std::abs(grad[i])) + noise);
    }
  }
}

TEST_CASE("weight-mode schedules") {
  LossConfig cfg;
  cfg.curriculum = CurriculumMode::kWeight;
  const int T = 6;
  SUBCASE("weights climb from epsilon ratios to one") {
    const CurriculumState start = CurriculumState::at(0, 1000, cfg);
    auto w = loss::curriculum_weights(T, cfg, start);
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(w[T] == doctest::Approx(0.05 / 1.05).epsilon(1e-12));
    auto b = loss::curriculum_scales(T, cfg, start);
    for (double v : b) CHECK(v == doctest::Approx(cfg.epsilon));
    const CurriculumState late = CurriculumState::at(1000000, 1000, cfg);
    w = loss::curriculum_weights(T, cfg, late);
    for (double v : w) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("all-one weights equal the plain loss at the floor scale") {
    Rng rng(8);
    const traj::BevPoint point{4, 4, 0.2};
    const TrajectoryTarget target = make_target(3, rng, point.azimuth);
    const std::vector<double> ch = random_channels(3, rng);
    const std::vector<double> floor_scale(3, cfg.epsilon);
    const std::vector<double> ones(3, 1.0);
    const double a = loss::pixel_regression_loss<double>(ch, point, target, floor_scale, ones,
                                                         false, 1.0, {});
    CHECK(a > 0.0);
  }
  SUBCASE("zero weight silences a step; doubling a weight doubles its gradient") {
    Rng rng(9);
    const traj::BevPoint point{4, 4, 0.2};
    const TrajectoryTarget target = make_target(3, rng, point.azimuth);
    const std::vector<double> ch = random_channels(3, rng);
    const std::vector<double> floor_scale(3, cfg.epsilon);

    std::vector<double> weights = {1.0, 0.0, 1.0};
    std::vector<double> grad(ch.size(), 0.0);
    loss::pixel_regression_loss<double>(ch, point, target, floor_scale, weights, false, 1.0,
                                        std::span<double>(grad));
    // step 1's own channels receive nothing: its displacement/orientation
    // gradients come only from later steps' dependence
    // (scales are per-step, so step 1's scale gradient must vanish).
    CHECK(grad[loss::reg::base(1) + 4] == 0.0);
    CHECK(grad[loss::reg::base(1) + 5] == 0.0);

    // doubling w_t doubles the direct contribution at the last step, which
    // has no downstream dependents
    std::vector<double> weights2 = {1.0, 0.0, 2.0};
    std::vector<double> grad2(ch.size(), 0.0);
    loss::pixel_regression_loss<double>(ch, point, target, floor_scale, weights2, false, 1.0,
                                        std::span<double>(grad2));
    for (int off = 0; off < 6; ++off) {
      const int idx = loss::reg::base(2) + off;
      CHECK(grad2[idx] == doctest::Approx(2.0 * grad[idx]).epsilon(1e-9));
    }
  }
}

TEST_CASE("total loss") {
  CHECK(loss::total_loss(0.5, 0.25, 4.0) == doctest::Approx(1.5));
  CHECK(loss::total_loss(0.7, 0.0, 4.0) == doctest::Approx(0.7));
  // linearity of the combination
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    const double cls = rng.uniform(0, 2), reg = rng.uniform(0, 2), lambda = rng.uniform(0.1, 8);
    CHECK(loss::total_loss(cls, reg, lambda) == doctest::Approx(cls + lambda * reg));
  }
}
