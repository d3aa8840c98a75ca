#pragma once

#include <cmath>
#include <stdexcept>

namespace rvm::loss {

// KL divergence between Laplace distributions, KL(p(. | mu_gt, b_gt) || q(. | mu, b)):
//   log(b / b_gt) + (b_gt * exp(-|mu - mu_gt| / b_gt) + |mu - mu_gt|) / b - 1
template <typename Scalar = double>
Scalar laplace_kl(Scalar mu_gt, Scalar b_gt, Scalar mu, Scalar b) {
  if (b_gt <= Scalar(0) || b <= Scalar(0))
    throw std::invalid_argument("laplace_kl: scales must be positive");
  const Scalar r = std::abs(mu - mu_gt);
  return std::log(b / b_gt) + (b_gt * std::exp(-r / b_gt) + r) / b - Scalar(1);
}

// d KL / d mu = sgn(mu - mu_gt) / b * (1 - exp(-|mu - mu_gt| / b_gt)).
// Bounded by 1/b; the exponential gate suppresses the gradient while the
// residual is small relative to the ground-truth scale.
template <typename Scalar = double>
Scalar laplace_kl_dmu(Scalar mu_gt, Scalar b_gt, Scalar mu, Scalar b) {
  if (b_gt <= Scalar(0) || b <= Scalar(0))
    throw std::invalid_argument("laplace_kl_dmu: scales must be positive");
  const Scalar d = mu - mu_gt;
  const Scalar sign = d > Scalar(0) ? Scalar(1) : (d < Scalar(0) ? Scalar(-1) : Scalar(0));
  return sign / b * (Scalar(1) - std::exp(-std::abs(d) / b_gt));
}

// d KL / d log(b), the adjoint used when the network predicts s = log b.
template <typename Scalar = double>
Scalar laplace_kl_dlogb(Scalar mu_gt, Scalar b_gt, Scalar mu, Scalar b) {
  if (b_gt <= Scalar(0) || b <= Scalar(0))
    throw std::invalid_argument("laplace_kl_dlogb: scales must be positive");
  const Scalar r = std::abs(mu - mu_gt);
  return Scalar(1) - (b_gt * std::exp(-r / b_gt) + r) / b;
}

template <typename Scalar = double>
Scalar laplace_cdf(Scalar x, Scalar mu, Scalar b) {
  if (b <= Scalar(0)) throw std::invalid_argument("laplace_cdf: scale must be positive");
  if (x < mu) return Scalar(0.5) * std::exp((x - mu) / b);
  return Scalar(1) - Scalar(0.5) * std::exp(-(x - mu) / b);
}

}  // namespace rvm::loss
