// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "flashsep/error.hpp"
#include "flashsep/image.hpp"

namespace flashsep::nn {

/// Dense CHW activation tensor (batch size 1).
template <class T>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int h, int w, T fill = T(0))
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return data.size(); }
  T& at(int c, int y, int x) { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  T at(int c, int y, int x) const { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

template <class T, class Space>
Tensor<T> to_tensor(const BasicImage<Space>& img) {
  Tensor<T> t(img.channels, img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) t.at(c, y, x) = static_cast<T>(img.at(x, y, c));
  return t;
}

template <class Space, class T>
BasicImage<Space> to_image(const Tensor<T>& t) {
  BasicImage<Space> img(t.width, t.height, t.channels);
  for (int y = 0; y < t.height; ++y)
    for (int x = 0; x < t.width; ++x)
      for (int c = 0; c < t.channels; ++c) img.at(x, y, c) = static_cast<float>(t.at(c, y, x));
  return img;
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.height == b.height && a.width == b.width, "concat: spatial shapes differ");
  Tensor<T> out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

/// Channels [first, first + count) of t.
template <class T>
Tensor<T> slice_channels(const Tensor<T>& t, int first, int count) {
  require(first >= 0 && first + count <= t.channels, "slice: channel range out of bounds");
  Tensor<T> out(count, t.height, t.width);
  const auto begin = t.data.begin() + static_cast<std::ptrdiff_t>(first * t.plane());
  std::copy(begin, begin + static_cast<std::ptrdiff_t>(out.size()), out.data.begin());
  return out;
}

/// Rec.709 luma of a 3-channel tensor.
template <class T>
Tensor<T> grayscale(const Tensor<T>& t) {
  require(t.channels == 3, "grayscale expects 3 channels");
  Tensor<T> out(1, t.height, t.width);
  const std::size_t n = t.plane();
  for (std::size_t i = 0; i < n; ++i)
    out.data[i] = static_cast<T>(0.2126 * t.data[i] + 0.7152 * t.data[n + i] + 0.0722 * t.data[2 * n + i]);
  return out;
}

}  // namespace flashsep::nn
