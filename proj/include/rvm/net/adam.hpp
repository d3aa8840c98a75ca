#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rvm/core/errors.hpp"

namespace rvm::net {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments kept in double so updates are bit-stable regardless of
// the parameter storage type.
struct AdamState {
  std::vector<double> m, v;
  std::int64_t step = 0;

  void init(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }
};

// One Adam update over a flat parameter block. `tag` identifies the layer in
// the non-finite-gradient error.
template <typename Scalar>
void adam_step(std::span<Scalar> params, std::span<const Scalar> grads, AdamState& state,
               const AdamConfig& cfg, const std::string& tag) {
  if (params.size() != grads.size() || state.m.size() != params.size())
    throw std::invalid_argument("adam_step: size mismatch for " + tag);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = double(grads[i]);
    if (!std::isfinite(g))
      throw NumericError("adam_step: non-finite gradient in layer " + tag);
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] = Scalar(double(params[i]) - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

}  // namespace rvm::net
