#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rvm/net/tensor.hpp"

namespace rvm::net {

// Convolution kernel + bias. Kernel layout is ((ky*kw + kx)*cin + ci, co),
// i.e. a (kh*kw*cin) x cout row-major matrix, which lets forward/backward run
// as plain GEMMs against im2col patches.
template <typename Scalar>
struct ConvParams {
  int kh = 0, kw = 0, cin = 0, cout = 0;
  std::vector<Scalar> kernel;
  std::vector<Scalar> bias;

  ConvParams() = default;
  ConvParams(int kh_, int kw_, int cin_, int cout_)
      : kh(kh_), kw(kw_), cin(cin_), cout(cout_),
        kernel(std::size_t(kh_) * kw_ * cin_ * cout_, Scalar(0)), bias(cout_, Scalar(0)) {}

  std::size_t parameter_count() const { return kernel.size() + bias.size(); }
};

inline int conv_out_width(int w, int col_stride) { return (w + col_stride - 1) / col_stride; }

// Rows: output pixels in row-major order; cols: (ky, kx, ci) patch entries.
// Rows are always unpadded in height only in the sense that padding is zero;
// the raster keeps its full height (row stride is fixed at 1).
template <typename Scalar>
void im2col(const Tensor<Scalar>& in, int kh, int kw, int col_stride, RowMat<Scalar>& col) {
  const int pad_h = kh / 2, pad_w = kw / 2;
  const int w_out = conv_out_width(in.w, col_stride);
  col.setZero(std::ptrdiff_t(in.h) * w_out, std::ptrdiff_t(kh) * kw * in.c);
  for (int y = 0; y < in.h; ++y) {
    for (int xo = 0; xo < w_out; ++xo) {
      const std::ptrdiff_t row = std::ptrdiff_t(y) * w_out + xo;
      for (int ky = 0; ky < kh; ++ky) {
        const int yi = y + ky - pad_h;
        if (yi < 0 || yi >= in.h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int xi = xo * col_stride + kx - pad_w;
          if (xi < 0 || xi >= in.w) continue;
          const Scalar* src = &in.data[(std::size_t(yi) * in.w + xi) * in.c];
          Scalar* dst = col.data() + row * col.cols() + (std::ptrdiff_t(ky) * kw + kx) * in.c;
          for (int ci = 0; ci < in.c; ++ci) dst[ci] = src[ci];
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const RowMat<Scalar>& col, int kh, int kw, int col_stride, Tensor<Scalar>& in_grad) {
  const int pad_h = kh / 2, pad_w = kw / 2;
  const int w_out = conv_out_width(in_grad.w, col_stride);
  for (int y = 0; y < in_grad.h; ++y) {
    for (int xo = 0; xo < w_out; ++xo) {
      const std::ptrdiff_t row = std::ptrdiff_t(y) * w_out + xo;
      for (int ky = 0; ky < kh; ++ky) {
        const int yi = y + ky - pad_h;
        if (yi < 0 || yi >= in_grad.h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int xi = xo * col_stride + kx - pad_w;
          if (xi < 0 || xi >= in_grad.w) continue;
          const Scalar* src = col.data() + row * col.cols() + (std::ptrdiff_t(ky) * kw + kx) * in_grad.c;
          Scalar* dst = &in_grad.data[(std::size_t(yi) * in_grad.w + xi) * in_grad.c];
          for (int ci = 0; ci < in_grad.c; ++ci) dst[ci] += src[ci];
        }
      }
    }
  }
}

// Patch buffers are large and rebuilt every call; reuse one per thread.
template <typename Scalar>
RowMat<Scalar>& im2col_scratch() {
  thread_local RowMat<Scalar> scratch;
  return scratch;
}

// Zero-padded convolution. Height is preserved; width shrinks only through
// `col_stride` (1 or 2), so all resampling is column-only.
template <typename Scalar>
Tensor<Scalar> conv2d_forward(const Tensor<Scalar>& in, const ConvParams<Scalar>& p, int col_stride) {
  if (col_stride != 1 && col_stride != 2)
    throw std::invalid_argument("conv2d: column stride must be 1 or 2");
  if (in.c != p.cin) throw std::invalid_argument("conv2d: input channel mismatch");
  const int w_out = conv_out_width(in.w, col_stride);
  Tensor<Scalar> out(in.h, w_out, p.cout);
  RowMat<Scalar>& col = im2col_scratch<Scalar>();
  im2col(in, p.kh, p.kw, col_stride, col);
  Eigen::Map<const RowMat<Scalar>> kernel(p.kernel.data(), std::ptrdiff_t(p.kh) * p.kw * p.cin, p.cout);
  Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> bias(p.bias.data(), p.cout);
  out.as_matrix().noalias() = col * kernel;
  out.as_matrix().rowwise() += bias;
  return out;
}

template <typename Scalar>
void conv2d_backward(const Tensor<Scalar>& in, const ConvParams<Scalar>& p, int col_stride,
                     const Tensor<Scalar>& grad_out, Tensor<Scalar>* grad_in,
                     ConvParams<Scalar>* grad_p) {
  if (in.c != p.cin) throw std::invalid_argument("conv2d_backward: input channel mismatch");
  const int w_out = conv_out_width(in.w, col_stride);
  if (grad_out.h != in.h || grad_out.w != w_out || grad_out.c != p.cout)
    throw std::invalid_argument("conv2d_backward: upstream gradient shape mismatch");
  RowMat<Scalar>& col = im2col_scratch<Scalar>();
  im2col(in, p.kh, p.kw, col_stride, col);
  Eigen::Map<const RowMat<Scalar>> kernel(p.kernel.data(), std::ptrdiff_t(p.kh) * p.kw * p.cin, p.cout);
  if (grad_p) {
    if (grad_p->kh != p.kh || grad_p->kw != p.kw || grad_p->cin != p.cin || grad_p->cout != p.cout)
      throw std::invalid_argument("conv2d_backward: parameter gradient shape mismatch");
    Eigen::Map<RowMat<Scalar>> gk(grad_p->kernel.data(), col.cols(), p.cout);
    gk.noalias() += col.transpose() * grad_out.as_matrix();
    Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> gb(grad_p->bias.data(), p.cout);
    gb += grad_out.as_matrix().colwise().sum();
  }
  if (grad_in) {
    require_shape(*grad_in, in.h, in.w, in.c, "conv2d_backward grad_in");
    thread_local RowMat<Scalar> dcol;
    dcol.noalias() = grad_out.as_matrix() * kernel.transpose();
    col2im(dcol, p.kh, p.kw, col_stride, *grad_in);
  }
}

template <typename Scalar>
Tensor<Scalar> relu_forward(const Tensor<Scalar>& in) {
  Tensor<Scalar> out(in.h, in.w, in.c);
  for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = in.data[i] > Scalar(0) ? in.data[i] : Scalar(0);
  return out;
}

template <typename Scalar>
void relu_backward(const Tensor<Scalar>& in, const Tensor<Scalar>& grad_out, Tensor<Scalar>& grad_in) {
  if (!in.same_shape(grad_out) || !in.same_shape(grad_in))
    throw std::invalid_argument("relu_backward: shape mismatch");
  for (std::size_t i = 0; i < in.size(); ++i)
    grad_in.data[i] += in.data[i] > Scalar(0) ? grad_out.data[i] : Scalar(0);
}

// Nearest-neighbour x2 upsampling along columns only.
template <typename Scalar>
Tensor<Scalar> column_upsample_forward(const Tensor<Scalar>& in) {
  Tensor<Scalar> out(in.h, in.w * 2, in.c);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int ch = 0; ch < in.c; ++ch) {
        const Scalar v = in.at(y, x, ch);
        out.at(y, 2 * x, ch) = v;
        out.at(y, 2 * x + 1, ch) = v;
      }
  return out;
}

template <typename Scalar>
void column_upsample_backward(const Tensor<Scalar>& grad_out, Tensor<Scalar>& grad_in) {
  if (grad_out.h != grad_in.h || grad_out.w != grad_in.w * 2 || grad_out.c != grad_in.c)
    throw std::invalid_argument("column_upsample_backward: shape mismatch");
  for (int y = 0; y < grad_in.h; ++y)
    for (int x = 0; x < grad_in.w; ++x)
      for (int ch = 0; ch < grad_in.c; ++ch)
        grad_in.at(y, x, ch) += grad_out.at(y, 2 * x, ch) + grad_out.at(y, 2 * x + 1, ch);
}

template <typename Scalar>
Tensor<Scalar> concat_channels(const std::vector<const Tensor<Scalar>*>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  int total = 0;
  for (const auto* t : parts) {
    if (t->h != parts[0]->h || t->w != parts[0]->w)
      throw std::invalid_argument("concat_channels: raster size mismatch");
    total += t->c;
  }
  Tensor<Scalar> out(parts[0]->h, parts[0]->w, total);
  const std::size_t pixels = std::size_t(out.h) * out.w;
  for (std::size_t i = 0; i < pixels; ++i) {
    Scalar* dst = &out.data[i * total];
    for (const auto* t : parts) {
      const Scalar* src = &t->data[i * t->c];
      for (int ch = 0; ch < t->c; ++ch) *dst++ = src[ch];
    }
  }
  return out;
}

template <typename Scalar>
void concat_channels_backward(const Tensor<Scalar>& grad_out,
                              const std::vector<Tensor<Scalar>*>& grad_parts) {
  int total = 0;
  for (const auto* t : grad_parts) total += t->c;
  if (total != grad_out.c) throw std::invalid_argument("concat_channels_backward: channel mismatch");
  const std::size_t pixels = std::size_t(grad_out.h) * grad_out.w;
  for (std::size_t i = 0; i < pixels; ++i) {
    const Scalar* src = &grad_out.data[i * total];
    for (Tensor<Scalar>* t : grad_parts) {
      Scalar* dst = &t->data[i * t->c];
      for (int ch = 0; ch < t->c; ++ch) dst[ch] += *src++;
    }
  }
}

template <typename Scalar>
Tensor<Scalar> residual_add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("residual_add: shape mismatch");
  Tensor<Scalar> out(a.h, a.w, a.c);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

}  // namespace rvm::net
