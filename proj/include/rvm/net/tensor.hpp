#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rvm::net {

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense H x W x C raster tensor, channels fastest.
template <typename Scalar>
struct Tensor {
  int h = 0, w = 0, c = 0;
  std::vector<Scalar> data;

  Tensor() = default;
  Tensor(int h_, int w_, int c_) : h(h_), w(w_), c(c_), data(std::size_t(h_) * w_ * c_, Scalar(0)) {}

  static Tensor zeros(int h, int w, int c) { return Tensor(h, w, c); }

  std::size_t size() const { return data.size(); }

  Scalar& at(int y, int x, int ch) { return data[(std::size_t(y) * w + x) * c + ch]; }
  Scalar at(int y, int x, int ch) const { return data[(std::size_t(y) * w + x) * c + ch]; }

  bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }

  // (h*w, c) view, rows are pixels in row-major order.
  Eigen::Map<RowMat<Scalar>> as_matrix() {
    return Eigen::Map<RowMat<Scalar>>(data.data(), std::ptrdiff_t(h) * w, c);
  }
  Eigen::Map<const RowMat<Scalar>> as_matrix() const {
    return Eigen::Map<const RowMat<Scalar>>(data.data(), std::ptrdiff_t(h) * w, c);
  }

  void fill(Scalar v) { std::fill(data.begin(), data.end(), v); }
};

template <typename Scalar>
void require_shape(const Tensor<Scalar>& t, int h, int w, int c, const char* what) {
  if (t.h != h || t.w != w || t.c != c)
    throw std::invalid_argument(std::string(what) + ": tensor shape mismatch");
}

}  // namespace rvm::net
