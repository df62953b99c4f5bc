// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Network variants and their wiring.
//
// Two-stage variants run a reflection network on the ambient image plus a
// grayscale guide, then a transmission network on the ambient image plus the
// estimated reflection. The guide never reaches the transmission network
// directly. Base variants estimate the transmission in one network from the
// ambient image and the full-color guide.

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flashsep/image.hpp"
#include "flashsep/nn/unet.hpp"

namespace flashsep::nn {

enum class Variant { TwoStageFo, TwoStageF, BaseFo, BaseF, SingleIa };

enum class Guide { None, FlashOnly, Flash };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
inline constexpr std::array<Variant, 5> kAllVariants = {Variant::BaseF, Variant::BaseFo, Variant::SingleIa,
                                                        Variant::TwoStageF, Variant::TwoStageFo};

bool is_two_stage(Variant v);
Guide guide_of(Variant v);

/// Width/depth shared by every network of a model.
struct NetShape {
  int levels = 3;
  std::vector<int> channels = {16, 32, 64};
  double slope = 0.2;
  bool operator==(const NetShape&) const = default;
};

/// Input channels of the reflection network (two-stage) or base network.
int first_stage_inputs(Variant v);

template <class T>
struct Model {
  Variant variant = Variant::TwoStageFo;
  NetShape shape;
  std::vector<std::string> net_names;  // "R", "T" or "B"
  std::vector<UNet<T>> nets;

  const UNet<T>& net(std::string_view name) const;
  UNet<T>& net(std::string_view name);
  std::size_t parameter_count() const;
  Model zeros_like() const;

  /// Visits every parameter tensor as (name, dims, values) in a fixed order.
  template <class F>
  void for_each_tensor(F&& f) {
    for (std::size_t n = 0; n < nets.size(); ++n)
      for (std::size_t l = 0; l < nets[n].layers.size(); ++l) {
        auto& layer = nets[n].layers[l];
        const std::string prefix = net_names[n] + "." + nets[n].names[l];
        f(prefix + ".weight", std::vector<int>{layer.out_channels, layer.in_channels, layer.kernel, layer.kernel},
          layer.weight);
        f(prefix + ".bias", std::vector<int>{layer.out_channels}, layer.bias);
      }
  }
};

template <class T>
Model<T> init_model(Variant variant, const NetShape& shape, std::uint64_t seed);

/// Network inputs of one sample, display-referred, CHW.
template <class T>
struct SampleTensors {
  Tensor<T> ambient;     // I_a
  Tensor<T> flash;       // I_f
  Tensor<T> flash_only;  // I_fo
  Tensor<T> transmission;  // T_a target
  Tensor<T> reflection;    // R_a target
};

template <class T>
const Tensor<T>* guide_tensor(Variant v, const SampleTensors<T>& s);

/// g_R: reflection estimate from the ambient image and the grayscale
/// flash-only image.
template <class T>
Tensor<T> estimate_reflection(const UNet<T>& g_r, const Tensor<T>& ambient, const Tensor<T>& flash_only);

/// g_T: transmission estimate from the ambient image and an estimated
/// reflection. The flash-only image is deliberately not a parameter.
template <class T>
Tensor<T> estimate_transmission(const UNet<T>& g_t, const Tensor<T>& ambient, const Tensor<T>& reflection);

template <class T>
struct ForwardPass {
  std::optional<Tensor<T>> reflection;  // two-stage only
  Tensor<T> transmission;
  UNetCache<T> first, second;
};

template <class T>
ForwardPass<T> model_forward(const Model<T>& m, const Tensor<T>& ambient, const Tensor<T>* guide);

struct LossBreakdown {
  double reflection = 0.0;    // L_R (two-stage only)
  double transmission = 0.0;  // L_T
  double total() const { return reflection + transmission; }
};

template <class T>
LossBreakdown model_loss(const ForwardPass<T>& pass, const SampleTensors<T>& s);

struct BackwardOptions {
  bool detach_reflection = false;  // stop L_T gradients at the estimated reflection
};

/// Loss and exact gradients of L_R + L_T (two-stage) or L_T (base) for one
/// sample, accumulated into `grads`.
template <class T>
LossBreakdown model_backward(const Model<T>& m, const SampleTensors<T>& s, Model<T>& grads,
                             const BackwardOptions& opt = {});

/// Transmission estimate of any variant.
template <class T>
Tensor<T> predict_transmission(const Model<T>& m, const SampleTensors<T>& s);

}  // namespace flashsep::nn
