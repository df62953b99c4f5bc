// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "flashsep/error.hpp"

namespace flashsep {

struct LinearSpace {};
struct DisplaySpace {};

/// Planar-interleaved float image (pixel-major, channels innermost).
/// The Space tag separates linear-light data from display-referred data so
/// the two cannot be mixed without an explicit transfer function.
template <class Space>
struct BasicImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  BasicImage() = default;
  BasicImage(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
    require(w >= 0 && h >= 0 && c > 0, "image dimensions must be non-negative");
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  bool same_shape(const BasicImage& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  template <class Other>
  bool same_extent(const BasicImage<Other>& o) const {
    return width == o.width && height == o.height;
  }
};

using LinearImage = BasicImage<LinearSpace>;
using SrgbImage = BasicImage<DisplaySpace>;

/// Reinterpret pixel values under a different space tag. Used where the
/// caller has applied the transfer function by other means.
template <class To, class From>
BasicImage<To> retag(BasicImage<From> img) {
  BasicImage<To> out;
  out.width = img.width;
  out.height = img.height;
  out.channels = img.channels;
  out.data = std::move(img.data);
  return out;
}

struct SaturationMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> valid;  // 1 = usable, 0 = at or near white level

  SaturationMask() = default;
  SaturationMask(int w, int h, bool fill = true)
      : width(w), height(h), valid(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool is_valid(int x, int y) const { return valid[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t invalid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v == 0;
    return n;
  }
};

/// Window [x0, x0+w) x [y0, y0+h) of an image.
template <class Space>
BasicImage<Space> crop(const BasicImage<Space>& img, int x0, int y0, int w, int h) {
  require(x0 >= 0 && y0 >= 0 && x0 + w <= img.width && y0 + h <= img.height,
          "crop window outside image");
  BasicImage<Space> out(w, h, img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
  return out;
}

}  // namespace flashsep
