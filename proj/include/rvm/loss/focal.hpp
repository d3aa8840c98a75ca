#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "rvm/net/tensor.hpp"

namespace rvm::loss {

// Focal classification loss over per-pixel logits, averaged over all H*W
// pixels (background included): mean of -(1 - p_true)^gamma * log p_true.
// Probabilities below 1e-12 are clamped; `clamp_count`, when given, counts
// how often that happened.
template <typename Scalar>
double focal_loss(const net::Tensor<Scalar>& logits, std::span<const int> labels, double gamma,
                  net::Tensor<Scalar>* grad_logits, std::int64_t* clamp_count = nullptr) {
  const std::size_t pixels = std::size_t(logits.h) * logits.w;
  const int classes = logits.c;
  if (labels.size() != pixels) throw std::invalid_argument("focal_loss: label count mismatch");
  if (grad_logits && !grad_logits->same_shape(logits))
    throw std::invalid_argument("focal_loss: gradient shape mismatch");
  if (gamma < 0) throw std::invalid_argument("focal_loss: gamma must be >= 0");

  constexpr double kMinProb = 1e-12;
  const double inv_n = 1.0 / double(pixels);
  double total = 0.0;
  std::vector<double> probs(classes);
  for (std::size_t i = 0; i < pixels; ++i) {
    const Scalar* z = &logits.data[i * classes];
    const int truth = labels[i];
    if (truth < 0 || truth >= classes) throw std::invalid_argument("focal_loss: label out of range");
    double zmax = double(z[0]);
    for (int j = 1; j < classes; ++j) zmax = std::max(zmax, double(z[j]));
    double denom = 0.0;
    for (int j = 0; j < classes; ++j) {
      probs[j] = std::exp(double(z[j]) - zmax);
      denom += probs[j];
    }
    for (int j = 0; j < classes; ++j) probs[j] /= denom;

    double p = probs[truth];
    if (p < kMinProb) {
      p = kMinProb;
      if (clamp_count) ++*clamp_count;
    }
    const double one_minus = 1.0 - p;
    const double focal_w = gamma == 0.0 ? 1.0 : std::pow(one_minus, gamma);
    total += -focal_w * std::log(p);

    if (grad_logits) {
      // dL/dp for L = -(1-p)^gamma log p.
      double dldp;
      if (gamma == 0.0) {
        dldp = -1.0 / p;
      } else if (one_minus <= 0.0) {
        dldp = 0.0;
      } else {
        dldp = gamma * std::pow(one_minus, gamma - 1.0) * std::log(p) - focal_w / p;
      }
      Scalar* g = &grad_logits->data[i * classes];
      for (int j = 0; j < classes; ++j) {
        const double jac = probs[truth] * ((j == truth ? 1.0 : 0.0) - probs[j]);
        g[j] += Scalar(inv_n * dldp * jac);
      }
    }
  }
  return total * inv_n;
}

}  // namespace rvm::loss
