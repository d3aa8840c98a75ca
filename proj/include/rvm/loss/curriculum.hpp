#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rvm::loss {

enum class CurriculumMode { kUncertainty, kWeight, kNone };

inline CurriculumMode curriculum_mode_from_string(const std::string& s) {
  if (s == "uncertainty") return CurriculumMode::kUncertainty;
  if (s == "weight") return CurriculumMode::kWeight;
  if (s == "none") return CurriculumMode::kNone;
  throw std::invalid_argument("unknown curriculum mode: " + s);
}

inline std::string to_string(CurriculumMode m) {
  switch (m) {
    case CurriculumMode::kUncertainty: return "uncertainty";
    case CurriculumMode::kWeight: return "weight";
    case CurriculumMode::kNone: return "none";
  }
  return "?";
}

struct LossConfig {
  double gamma = 2.0;    // focal focusing parameter
  double lambda = 4.0;   // regression weight in the total loss
  double eta = 1.0;      // max extra ground-truth scale at t = T, meters
  double epsilon = 0.05; // ground-truth scale floor, meters
  double beta = 0.0;     // decay rate per iteration; <= 0 derives from the
                         // iteration budget so alpha reaches 1e-3 mid-training
  CurriculumMode curriculum = CurriculumMode::kUncertainty;

  void validate() const {
    if (gamma < 0) throw std::invalid_argument("LossConfig: gamma must be >= 0");
    if (lambda <= 0) throw std::invalid_argument("LossConfig: lambda must be > 0");
    if (eta <= 0 || epsilon <= 0) throw std::invalid_argument("LossConfig: eta/epsilon must be > 0");
  }
};

inline double resolved_beta(const LossConfig& cfg, int total_iterations) {
  if (cfg.beta > 0) return cfg.beta;
  const int k = std::max(total_iterations, 1);
  return 2.0 * std::log(1000.0) / double(k);
}

struct CurriculumState {
  int iteration = 0;        // k
  int total_iterations = 1; // K
  double beta = 0.0;

  static CurriculumState at(int iteration, int total_iterations, const LossConfig& cfg) {
    CurriculumState s;
    s.iteration = iteration;
    s.total_iterations = total_iterations;
    s.beta = resolved_beta(cfg, total_iterations);
    return s;
  }

  double alpha() const { return std::exp(-beta * iteration); }
};

// Ground-truth Laplace scale for step t of a horizon-T trajectory:
//   b~_t = alpha * ((t/T) eta + epsilon) + (1 - alpha) * epsilon,
// shared across all objects and corner dimensions at that step.
inline double curriculum_scale(int t, int horizon, const LossConfig& cfg,
                               const CurriculumState& state) {
  if (t < 0 || t > horizon) throw std::invalid_argument("curriculum_scale: t out of range");
  const double a = state.alpha();
  const double b_max = (double(t) / double(horizon)) * cfg.eta + cfg.epsilon;
  return a * b_max + (1.0 - a) * cfg.epsilon;
}

// Per-step ground-truth scales for the configured curriculum mode. In weight
// mode the scale stays at the floor and the schedule moves into the weights.
inline std::vector<double> curriculum_scales(int horizon, const LossConfig& cfg,
                                             const CurriculumState& state) {
  std::vector<double> out(horizon + 1);
  for (int t = 0; t <= horizon; ++t)
    out[t] = cfg.curriculum == CurriculumMode::kUncertainty ? curriculum_scale(t, horizon, cfg, state)
                                                            : cfg.epsilon;
  return out;
}

// Per-step loss weights. The weight-based schedule mirrors the uncertainty
// schedule: w_t = epsilon / b~_t(alpha), ramping late steps from ~epsilon/eta
// up to 1 as alpha decays.
inline std::vector<double> curriculum_weights(int horizon, const LossConfig& cfg,
                                              const CurriculumState& state) {
  std::vector<double> out(horizon + 1, 1.0);
  if (cfg.curriculum == CurriculumMode::kWeight) {
    for (int t = 0; t <= horizon; ++t)
      out[t] = cfg.epsilon / curriculum_scale(t, horizon, cfg, state);
  }
  return out;
}

inline double total_loss(double classification, double regression, double lambda) {
  return classification + lambda * regression;
}

}  // namespace rvm::loss
