// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Plain U-Net without normalization layers.
//
//   enc0: 3x3 conv in -> c0
//   for l = 1..L-1:  down_l: 3x3 stride-2 conv c(l-1) -> c(l);  enc_l: 3x3 conv c(l) -> c(l)
//   for l = L-2..0:  up_l: nearest x2 + 3x3 conv c(l+1) -> c(l)
//                    dec_l: 3x3 conv on [enc_l output, up_l output] (2 c(l)) -> c(l)
//   head: 1x1 conv c0 -> out
//
// Leaky rectifier after every layer except the head.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "flashsep/nn/layers.hpp"
#include "flashsep/rng.hpp"

namespace flashsep::nn {

struct UNetArch {
  int levels = 3;
  std::vector<int> channels = {16, 32, 64};
  int in_channels = 3;
  int out_channels = 3;
  double slope = 0.2;

  void validate() const {
    require(levels >= 1 && static_cast<int>(channels.size()) == levels, "arch: one channel count per level");
    for (int c : channels) require(c > 0, "arch: channel counts must be positive");
    require(in_channels > 0 && out_channels > 0, "arch: channel counts must be positive");
    require(slope > 0.0 && slope < 1.0, "arch: leaky slope must lie in (0, 1)");
  }
  /// Spatial dimensions must be multiples of this.
  int divisor() const { return 1 << (levels - 1); }
  bool operator==(const UNetArch&) const = default;
};

enum class LayerKind { Encoder, Down, Up, Decoder, Head };

template <class T>
struct UNet {
  UNetArch arch;
  std::vector<Conv2d<T>> layers;
  std::vector<std::string> names;
  std::vector<LayerKind> kinds;

  /// Zero-initialized network with the layer layout of `arch`.
  explicit UNet(const UNetArch& a = {}) : arch(a) {
    arch.validate();
    const auto& c = arch.channels;
    add("enc0", LayerKind::Encoder, Conv2d<T>(arch.in_channels, c[0], 3, 1));
    for (int l = 1; l < arch.levels; ++l) {
      add("down" + std::to_string(l), LayerKind::Down, Conv2d<T>(c[l - 1], c[l], 3, 2));
      add("enc" + std::to_string(l), LayerKind::Encoder, Conv2d<T>(c[l], c[l], 3, 1));
    }
    for (int l = arch.levels - 2; l >= 0; --l) {
      add("up" + std::to_string(l), LayerKind::Up, Conv2d<T>(c[l + 1], c[l], 3, 1));
      add("dec" + std::to_string(l), LayerKind::Decoder, Conv2d<T>(2 * c[l], c[l], 3, 1));
    }
    add("head", LayerKind::Head, Conv2d<T>(c[0], arch.out_channels, 1, 1));
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  UNet zeros_like() const { return UNet(arch); }

 private:
  void add(std::string name, LayerKind kind, Conv2d<T> conv) {
    names.push_back(std::move(name));
    kinds.push_back(kind);
    layers.push_back(std::move(conv));
  }
};

/// He-scaled Gaussian weights (std = sqrt(2 / fan_in)), zero biases.
template <class T>
UNet<T> init_unet(const UNetArch& arch, std::uint64_t seed) {
  UNet<T> net(arch);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& layer = net.layers[i];
    Rng rng(seed, net.names[i]);
    const double std_dev = std::sqrt(2.0 / layer.fan_in());
    for (auto& w : layer.weight) w = static_cast<T>(std_dev * rng.normal());
  }
  return net;
}

template <class T>
struct UNetCache {
  std::vector<ConvCache<T>> conv;
  std::vector<Tensor<T>> out;  // post-activation output of every layer
};

template <class T>
Tensor<T> unet_forward(const UNet<T>& net, const Tensor<T>& x, UNetCache<T>& cache) {
  const auto& arch = net.arch;
  require(x.channels == arch.in_channels, "forward: expected " + std::to_string(arch.in_channels) +
                                              " input channels, got " + std::to_string(x.channels));
  require(x.height > 0 && x.width > 0 && x.height % arch.divisor() == 0 && x.width % arch.divisor() == 0,
          "forward: spatial dimensions must be divisible by " + std::to_string(arch.divisor()));
  const T slope = static_cast<T>(arch.slope);
  cache.conv.assign(net.layers.size(), {});
  cache.out.assign(net.layers.size(), {});

  std::size_t idx = 0;
  auto apply = [&](const Tensor<T>& in, bool activate) {
    Tensor<T> y = conv2d_forward(net.layers[idx], in, cache.conv[idx]);
    if (activate) leaky_relu_inplace(y, slope);
    cache.out[idx] = y;
    ++idx;
    return y;
  };

  std::vector<Tensor<T>> skips(arch.levels);
  Tensor<T> h = apply(x, true);
  skips[0] = h;
  for (int l = 1; l < arch.levels; ++l) {
    h = apply(h, true);
    h = apply(h, true);
    skips[l] = h;
  }
  for (int l = arch.levels - 2; l >= 0; --l) {
    h = apply(upsample2x(h), true);
    h = apply(concat_channels(skips[l], h), true);
  }
  return apply(h, false);
}

template <class T>
Tensor<T> unet_forward(const UNet<T>& net, const Tensor<T>& x) {
  UNetCache<T> cache;
  return unet_forward(net, x, cache);
}

/// Accumulates parameter gradients into `grads` and returns dL/dx.
template <class T>
Tensor<T> unet_backward(const UNet<T>& net, const UNetCache<T>& cache, const Tensor<T>& dy, UNet<T>& grads) {
  const auto& arch = net.arch;
  const T slope = static_cast<T>(arch.slope);
  std::size_t idx = net.layers.size();
  auto back = [&](Tensor<T> d, bool activated) {
    --idx;
    if (activated) leaky_relu_backward_inplace(d, cache.out[idx], slope);
    return conv2d_backward(net.layers[idx], cache.conv[idx], d, grads.layers[idx]);
  };

  std::vector<Tensor<T>> dskips(arch.levels);
  Tensor<T> d = back(dy, false);
  for (int l = 0; l <= arch.levels - 2; ++l) {
    const Tensor<T> dcat = back(d, true);
    const int c = arch.channels[l];
    dskips[l] = slice_channels(dcat, 0, c);
    d = upsample2x_backward(back(slice_channels(dcat, c, c), true));
  }
  for (int l = arch.levels - 1; l >= 1; --l) {
    if (l < arch.levels - 1)
      for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dskips[l].data[i];
    d = back(d, true);
    d = back(d, true);
  }
  if (arch.levels > 1)
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += dskips[0].data[i];
  return back(d, true);
}

}  // namespace flashsep::nn
