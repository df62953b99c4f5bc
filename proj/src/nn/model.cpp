// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/nn/model.hpp"

#include "flashsep/rng.hpp"

namespace flashsep::nn {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::TwoStageFo: return "two_stage_fo";
    case Variant::TwoStageF: return "two_stage_f";
    case Variant::BaseFo: return "base_fo";
    case Variant::BaseF: return "base_f";
    case Variant::SingleIa: return "single_ia";
  }
  return "two_stage_fo";
}

Variant parse_variant(std::string_view name) {
  for (auto v : kAllVariants)
    if (to_string(v) == name) return v;
  throw ValidationError("unknown variant '" + std::string(name) + "'");
}

bool is_two_stage(Variant v) { return v == Variant::TwoStageFo || v == Variant::TwoStageF || v == Variant::SingleIa; }

Guide guide_of(Variant v) {
  switch (v) {
    case Variant::TwoStageFo:
    case Variant::BaseFo: return Guide::FlashOnly;
    case Variant::TwoStageF:
    case Variant::BaseF: return Guide::Flash;
    case Variant::SingleIa: return Guide::None;
  }
  return Guide::None;
}

int first_stage_inputs(Variant v) {
  if (!is_two_stage(v)) return 6;
  return guide_of(v) == Guide::None ? 3 : 4;
}

template <class T>
const UNet<T>& Model<T>::net(std::string_view name) const {
  for (std::size_t i = 0; i < nets.size(); ++i)
    if (net_names[i] == name) return nets[i];
  throw ValidationError("model has no network '" + std::string(name) + "'");
}

template <class T>
UNet<T>& Model<T>::net(std::string_view name) {
  return const_cast<UNet<T>&>(static_cast<const Model&>(*this).net(name));
}

template <class T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& net : nets) n += net.parameter_count();
  return n;
}

template <class T>
Model<T> Model<T>::zeros_like() const {
  Model out;
  out.variant = variant;
  out.shape = shape;
  out.net_names = net_names;
  for (const auto& net : nets) out.nets.push_back(net.zeros_like());
  return out;
}

namespace {

UNetArch arch_for(const NetShape& shape, int in_channels) {
  UNetArch a;
  a.levels = shape.levels;
  a.channels = shape.channels;
  a.slope = shape.slope;
  a.in_channels = in_channels;
  a.out_channels = 3;
  return a;
}

}  // namespace

template <class T>
Model<T> init_model(Variant variant, const NetShape& shape, std::uint64_t seed) {
  Model<T> m;
  m.variant = variant;
  m.shape = shape;
  if (is_two_stage(variant)) {
    m.net_names = {"R", "T"};
    m.nets.push_back(init_unet<T>(arch_for(shape, first_stage_inputs(variant)), derive_seed(seed, "R")));
    m.nets.push_back(init_unet<T>(arch_for(shape, 6), derive_seed(seed, "T")));
  } else {
    m.net_names = {"B"};
    m.nets.push_back(init_unet<T>(arch_for(shape, 6), derive_seed(seed, "B")));
  }
  return m;
}

template <class T>
const Tensor<T>* guide_tensor(Variant v, const SampleTensors<T>& s) {
  switch (guide_of(v)) {
    case Guide::FlashOnly: return &s.flash_only;
    case Guide::Flash: return &s.flash;
    case Guide::None: return nullptr;
  }
  return nullptr;
}

template <class T>
Tensor<T> estimate_reflection(const UNet<T>& g_r, const Tensor<T>& ambient, const Tensor<T>& flash_only) {
  require(ambient.channels == 3 && flash_only.channels == 3, "reflection network expects RGB inputs");
  require(ambient.same_shape(flash_only), "ambient and flash-only images are misaligned");
  require(g_r.arch.in_channels == 4, "reflection network expects 4 input channels");
  return unet_forward(g_r, concat_channels(ambient, grayscale(flash_only)));
}

template <class T>
Tensor<T> estimate_transmission(const UNet<T>& g_t, const Tensor<T>& ambient, const Tensor<T>& reflection) {
  require(ambient.channels == 3 && reflection.channels == 3, "transmission network expects RGB inputs");
  require(ambient.same_shape(reflection), "ambient image and reflection are misaligned");
  require(g_t.arch.in_channels == 6, "transmission network expects 6 input channels");
  return unet_forward(g_t, concat_channels(ambient, reflection));
}

template <class T>
ForwardPass<T> model_forward(const Model<T>& m, const Tensor<T>& ambient, const Tensor<T>* guide) {
  require(ambient.channels == 3, "ambient image must have 3 channels");
  const Guide g = guide_of(m.variant);
  require((g == Guide::None) == (guide == nullptr), "guide image presence does not match the variant");
  if (guide) require(guide->same_shape(ambient), "guide image is misaligned with the ambient image");

  ForwardPass<T> pass;
  if (is_two_stage(m.variant)) {
    const Tensor<T> first_in = guide ? concat_channels(ambient, grayscale(*guide)) : ambient;
    pass.reflection = unet_forward(m.nets[0], first_in, pass.first);
    pass.transmission = unet_forward(m.nets[1], concat_channels(ambient, *pass.reflection), pass.second);
  } else {
    pass.transmission = unet_forward(m.nets[0], concat_channels(ambient, *guide), pass.first);
  }
  return pass;
}

template <class T>
LossBreakdown model_loss(const ForwardPass<T>& pass, const SampleTensors<T>& s) {
  LossBreakdown loss;
  if (pass.reflection) loss.reflection = l2_loss(*pass.reflection, s.reflection);
  loss.transmission = l2_loss(pass.transmission, s.transmission);
  return loss;
}

template <class T>
LossBreakdown model_backward(const Model<T>& m, const SampleTensors<T>& s, Model<T>& grads,
                             const BackwardOptions& opt) {
  const ForwardPass<T> pass = model_forward(m, s.ambient, guide_tensor(m.variant, s));
  const LossBreakdown loss = model_loss(pass, s);
  const Tensor<T> dt = l2_loss_grad(pass.transmission, s.transmission);
  if (!is_two_stage(m.variant)) {
    unet_backward(m.nets[0], pass.first, dt, grads.nets[0]);
    return loss;
  }
  const Tensor<T> dx_t = unet_backward(m.nets[1], pass.second, dt, grads.nets[1]);
  Tensor<T> dr = l2_loss_grad(*pass.reflection, s.reflection);
  if (!opt.detach_reflection) {
    // Channels 3..5 of the transmission network input are the reflection.
    const Tensor<T> via_t = slice_channels(dx_t, 3, 3);
    for (std::size_t i = 0; i < dr.size(); ++i) dr.data[i] += via_t.data[i];
  }
  unet_backward(m.nets[0], pass.first, dr, grads.nets[0]);
  return loss;
}

template <class T>
Tensor<T> predict_transmission(const Model<T>& m, const SampleTensors<T>& s) {
  return model_forward(m, s.ambient, guide_tensor(m.variant, s)).transmission;
}

#define FLASHSEP_INSTANTIATE(T)                                                                              \
  template struct Model<T>;                                                                                  \
  template Model<T> init_model<T>(Variant, const NetShape&, std::uint64_t);                                  \
  template const Tensor<T>* guide_tensor(Variant, const SampleTensors<T>&);                                  \
  template Tensor<T> estimate_reflection(const UNet<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> estimate_transmission(const UNet<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template ForwardPass<T> model_forward(const Model<T>&, const Tensor<T>&, const Tensor<T>*);                \
  template LossBreakdown model_loss(const ForwardPass<T>&, const SampleTensors<T>&);                         \
  template LossBreakdown model_backward(const Model<T>&, const SampleTensors<T>&, Model<T>&,                 \
                                        const BackwardOptions&);                                             \
  template Tensor<T> predict_transmission(const Model<T>&, const SampleTensors<T>&);

FLASHSEP_INSTANTIATE(float)
FLASHSEP_INSTANTIATE(double)

}  // namespace flashsep::nn
