#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rvm/loss/laplace.hpp"

namespace rvm::eval {

// One predicted Laplace distribution together with the realized value.
struct CalibrationSample {
  double mu = 0.0;
  double b = 1.0;
  double value = 0.0;
};

// Expected CDF levels vs observed fraction of probability-integral-transform
// values at or below them. A perfectly calibrated predictor tracks the
// diagonal.
struct CalibrationCurve {
  std::vector<double> expected;  // 20 uniform CDF levels
  std::vector<double> observed;
};

inline CalibrationCurve calibration_curve(const std::vector<CalibrationSample>& samples,
                                          int bins = 20) {
  CalibrationCurve curve;
  std::vector<double> u;
  u.reserve(samples.size());
  for (const CalibrationSample& s : samples) u.push_back(loss::laplace_cdf(s.value, s.mu, s.b));
  std::sort(u.begin(), u.end());
  for (int i = 1; i <= bins; ++i) {
    const double p = double(i) / double(bins);
    curve.expected.push_back(p);
    const auto count = std::upper_bound(u.begin(), u.end(), p) - u.begin();
    curve.observed.push_back(u.empty() ? 0.0 : double(count) / double(u.size()));
  }
  return curve;
}

inline double max_diagonal_deviation(const CalibrationCurve& curve) {
  double worst = 0.0;
  for (std::size_t i = 0; i < curve.expected.size(); ++i)
    worst = std::max(worst, std::abs(curve.observed[i] - curve.expected[i]));
  return worst;
}

}  // namespace rvm::eval
