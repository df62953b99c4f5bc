// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Layer primitives with hand-derived gradients. Convolutions lower to
// im2col + GEMM; backward passes accumulate into the gradient buffers.

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "flashsep/nn/tensor.hpp"

namespace flashsep::nn {

template <class T>
struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  std::vector<T> weight;  // [out][in][k][k]
  std::vector<T> bias;    // [out]

  Conv2d() = default;
  Conv2d(int in, int out, int k, int s)
      : in_channels(in), out_channels(out), kernel(k), stride(s),
        weight(static_cast<std::size_t>(out) * in * k * k, T(0)), bias(static_cast<std::size_t>(out), T(0)) {}

  int padding() const { return kernel / 2; }
  int fan_in() const { return in_channels * kernel * kernel; }
  int out_extent(int in_extent) const { return (in_extent + 2 * padding() - kernel) / stride + 1; }
};

template <class T>
struct ConvCache {
  std::vector<T> col;  // [in*k*k][out_h*out_w]
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
};

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

template <class T>
void im2col(const Conv2d<T>& conv, const Tensor<T>& x, ConvCache<T>& cache) {
  const int k = conv.kernel, s = conv.stride, pad = conv.padding();
  cache.in_h = x.height;
  cache.in_w = x.width;
  cache.out_h = conv.out_extent(x.height);
  cache.out_w = conv.out_extent(x.width);
  const int oh = cache.out_h, ow = cache.out_w, w = x.width;
  const std::size_t cols = static_cast<std::size_t>(oh) * ow;
  cache.col.resize(static_cast<std::size_t>(conv.fan_in()) * cols);
  for (int c = 0; c < x.channels; ++c) {
    const T* src = x.data.data() + c * x.plane();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = &cache.col[((static_cast<std::size_t>(c) * k + ky) * k + kx) * cols];
        // Output columns whose input column lies inside the image.
        const int lo = std::min(ow, std::max(0, (pad - kx + s - 1) / s));
        const int hi = std::max(lo, std::min(ow, (w - 1 + pad - kx) / s + 1));
        for (int oy = 0; oy < oh; ++oy) {
          T* dst = row + static_cast<std::size_t>(oy) * ow;
          const int iy = oy * s + ky - pad;
          if (iy < 0 || iy >= x.height) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* in = src + static_cast<std::ptrdiff_t>(iy) * w;
          const int x0 = kx - pad;
          std::fill(dst, dst + lo, T(0));
          if (s == 1) {
            std::copy(in + (lo + x0), in + (hi + x0), dst + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox] = in[ox * s + x0];
          }
          std::fill(dst + hi, dst + ow, T(0));
        }
      }
    }
  }
}

template <class T>
Tensor<T> col2im(const Conv2d<T>& conv, const std::vector<T>& dcol, const ConvCache<T>& cache) {
  const int k = conv.kernel, s = conv.stride, pad = conv.padding();
  const int oh = cache.out_h, ow = cache.out_w, w = cache.in_w;
  const std::size_t cols = static_cast<std::size_t>(oh) * ow;
  Tensor<T> dx(conv.in_channels, cache.in_h, cache.in_w);
  for (int c = 0; c < conv.in_channels; ++c) {
    T* dst = dx.data.data() + c * dx.plane();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = &dcol[((static_cast<std::size_t>(c) * k + ky) * k + kx) * cols];
        const int lo = std::min(ow, std::max(0, (pad - kx + s - 1) / s));
        const int hi = std::max(lo, std::min(ow, (w - 1 + pad - kx) / s + 1));
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s + ky - pad;
          if (iy < 0 || iy >= cache.in_h) continue;
          const T* g = row + static_cast<std::size_t>(oy) * ow;
          T* out = dst + static_cast<std::ptrdiff_t>(iy) * w;
          const int x0 = kx - pad;
          for (int ox = lo; ox < hi; ++ox) out[ox * s + x0] += g[ox];
        }
      }
    }
  }
  return dx;
}

template <class T>
Tensor<T> conv2d_forward(const Conv2d<T>& conv, const Tensor<T>& x, ConvCache<T>& cache) {
  require(x.channels == conv.in_channels, "conv: input channel mismatch");
  im2col(conv, x, cache);
  Tensor<T> y(conv.out_channels, cache.out_h, cache.out_w);
  const auto cols = static_cast<Eigen::Index>(y.plane());
  ConstMatMap<T> w(conv.weight.data(), conv.out_channels, conv.fan_in());
  ConstMatMap<T> col(cache.col.data(), conv.fan_in(), cols);
  MatMap<T> out(y.data.data(), conv.out_channels, cols);
  out.noalias() = w * col;
  for (int o = 0; o < conv.out_channels; ++o) out.row(o).array() += conv.bias[o];
  return y;
}

/// Accumulates weight/bias gradients into `grad` and returns dL/dx.
template <class T>
Tensor<T> conv2d_backward(const Conv2d<T>& conv, const ConvCache<T>& cache, const Tensor<T>& dy, Conv2d<T>& grad) {
  const auto cols = static_cast<Eigen::Index>(dy.plane());
  ConstMatMap<T> dout(dy.data.data(), conv.out_channels, cols);
  ConstMatMap<T> col(cache.col.data(), conv.fan_in(), cols);
  MatMap<T> dw(grad.weight.data(), conv.out_channels, conv.fan_in());
  dw.noalias() += dout * col.transpose();
  // Sequential sum: Eigen's vectorized reduction peels by address alignment,
  // which would make results depend on where the heap placed dy.
  for (int o = 0; o < conv.out_channels; ++o) {
    const T* row = dy.data.data() + static_cast<std::size_t>(o) * dy.plane();
    T s = T(0);
    for (Eigen::Index i = 0; i < cols; ++i) s += row[i];
    grad.bias[o] += s;
  }
  std::vector<T> dcol(cache.col.size());
  MatMap<T> dc(dcol.data(), conv.fan_in(), cols);
  ConstMatMap<T> w(conv.weight.data(), conv.out_channels, conv.fan_in());
  dc.noalias() = w.transpose() * dout;
  return col2im(conv, dcol, cache);
}

template <class T>
void leaky_relu_inplace(Tensor<T>& x, T slope) {
  for (auto& v : x.data) v = v > T(0) ? v : slope * v;
}

/// Uses the activation output: for a positive slope, sign(y) = sign(x).
template <class T>
void leaky_relu_backward_inplace(Tensor<T>& dy, const Tensor<T>& y, T slope) {
  for (std::size_t i = 0; i < dy.data.size(); ++i)
    if (!(y.data[i] > T(0))) dy.data[i] *= slope;
}

template <class T>
Tensor<T> upsample2x(const Tensor<T>& x) {
  Tensor<T> y(x.channels, x.height * 2, x.width * 2);
  for (int c = 0; c < x.channels; ++c)
    for (int yy = 0; yy < y.height; ++yy)
      for (int xx = 0; xx < y.width; ++xx) y.at(c, yy, xx) = x.at(c, yy / 2, xx / 2);
  return y;
}

template <class T>
Tensor<T> upsample2x_backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.channels, dy.height / 2, dy.width / 2);
  for (int c = 0; c < dy.channels; ++c)
    for (int yy = 0; yy < dy.height; ++yy)
      for (int xx = 0; xx < dy.width; ++xx) dx.at(c, yy / 2, xx / 2) += dy.at(c, yy, xx);
  return dx;
}

/// Mean squared error over all elements.
template <class T>
double l2_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  require(pred.same_shape(target), "l2_loss: shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
    sum += d * d;
  }
  return pred.size() ? sum / static_cast<double>(pred.size()) : 0.0;
}

template <class T>
Tensor<T> l2_loss_grad(const Tensor<T>& pred, const Tensor<T>& target) {
  require(pred.same_shape(target), "l2_loss: shape mismatch");
  Tensor<T> g(pred.channels, pred.height, pred.width);
  const T scale = static_cast<T>(2.0 / static_cast<double>(pred.size()));
  for (std::size_t i = 0; i < pred.size(); ++i) g.data[i] = scale * (pred.data[i] - target.data[i]);
  return g;
}

}  // namespace flashsep::nn
