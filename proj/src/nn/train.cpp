// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "flashsep/isp.hpp"
#include "flashsep/raw.hpp"
#include "flashsep/rng.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace flashsep::nn {

std::string_view to_string(LrSchedule s) { return s == LrSchedule::Cosine ? "cosine" : "constant"; }

LrSchedule parse_schedule(std::string_view name) {
  if (name == "constant") return LrSchedule::Constant;
  if (name == "cosine") return LrSchedule::Cosine;
  throw ValidationError("unknown learning rate schedule '" + std::string(name) + "'");
}

double TrainConfig::learning_rate_at(int epoch) const {
  if (schedule == LrSchedule::Constant || epochs <= 0) return learning_rate;
  const double progress = static_cast<double>(epoch - 1) / static_cast<double>(epochs);
  return learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void TrainConfig::validate() const {
  require(epochs >= 0, "epochs must be non-negative");
  require(batch_size >= 1, "batch size must be positive");
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning rate must be finite and non-negative");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "adam betas must lie in [0, 1)");
  require(epsilon > 0.0, "adam epsilon must be positive");
  UNetArch a;
  a.levels = shape.levels;
  a.channels = shape.channels;
  a.slope = shape.slope;
  a.validate();
}

OptimState make_optim_state(const Model<float>& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

namespace {

template <class F>
void for_each_pair(Model<float>& a, const Model<float>& b, OptimState& s, F&& f) {
  for (std::size_t n = 0; n < a.nets.size(); ++n)
    for (std::size_t l = 0; l < a.nets[n].layers.size(); ++l) {
      auto& pa = a.nets[n].layers[l];
      const auto& pb = b.nets[n].layers[l];
      auto& m = s.m.nets[n].layers[l];
      auto& v = s.v.nets[n].layers[l];
      f(pa.weight, pb.weight, m.weight, v.weight);
      f(pa.bias, pb.bias, m.bias, v.bias);
    }
}

}  // namespace

void adam_step(Model<float>& params, const Model<float>& grads, OptimState& state, const TrainConfig& cfg) {
  require(params.nets.size() == grads.nets.size() && params.nets.size() == state.m.nets.size(),
          "adam: parameter, gradient and state layouts differ");
  ++state.step;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = cfg.learning_rate, eps = cfg.epsilon;
  for_each_pair(params, grads, state,
                [&](std::vector<float>& p, const std::vector<float>& g, std::vector<float>& m, std::vector<float>& v) {
                  require(p.size() == g.size() && p.size() == m.size(), "adam: tensor size mismatch");
                  for (std::size_t i = 0; i < p.size(); ++i) {
                    const double gi = g[i];
                    const double mi = b1 * m[i] + (1.0 - b1) * gi;
                    const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
                    m[i] = static_cast<float>(mi);
                    v[i] = static_cast<float>(vi);
                    const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + eps);
                    p[i] = static_cast<float>(p[i] - update);
                  }
                });
}

SampleTensors<float> prepare_sample(const SampleSet& s) {
  s.raw_a.validate();
  s.raw_f.validate();
  const IspMetadata meta = metadata_of(s.raw_a);
  const Cfa cfa = s.raw_a.meta.cfa;
  const FlashOnly fo = subtract_flash_only(s.raw_f, s.raw_a);
  SampleTensors<float> t;
  t.ambient = to_tensor<float>(run_isp(s.raw_a, meta));
  t.flash = to_tensor<float>(run_isp(s.raw_f, meta));
  t.flash_only = to_tensor<float>(process_plane(fo.plane, cfa, meta));
  t.transmission = to_tensor<float>(process_plane(sample_cfa(s.t_a, cfa), cfa, meta));
  t.reflection = to_tensor<float>(process_plane(sample_cfa(s.r_a, cfa), cfa, meta));
  return t;
}

double mean_transmission_loss(const Model<float>& m, const std::vector<SampleTensors<float>>& samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) sum += l2_loss(predict_transmission(m, s), s.transmission);
  return sum / static_cast<double>(samples.size());
}

namespace {

double mean_objective(const Model<float>& m, const std::vector<SampleTensors<float>>& samples) {
  double sum = 0.0;
  for (const auto& s : samples)
    sum += model_loss(model_forward(m, s.ambient, guide_tensor(m.variant, s)), s).total();
  return sum / static_cast<double>(samples.size());
}

void zero(Model<float>& g) {
  for (auto& net : g.nets)
    for (auto& layer : net.layers) {
      std::fill(layer.weight.begin(), layer.weight.end(), 0.0f);
      std::fill(layer.bias.begin(), layer.bias.end(), 0.0f);
    }
}

void scale(Model<float>& g, float k) {
  for (auto& net : g.nets)
    for (auto& layer : net.layers) {
      for (auto& w : layer.weight) w *= k;
      for (auto& b : layer.bias) b *= k;
    }
}

// Activation and im2col buffers of several megabytes are allocated on every
// step. Keeping them on the heap avoids an mmap/munmap pair and page faults
// for each one.
void retain_large_allocations() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
  });
#endif
}

void check_finite(double loss, int epoch, std::size_t sample) {
  if (!std::isfinite(loss))
    throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch) + ", sample " +
                             std::to_string(sample) + "; lower the learning rate or inspect the inputs");
}

}  // namespace

TrainResult train(const std::vector<SampleTensors<float>>& train_set, const std::vector<SampleTensors<float>>& val_set,
                  Variant variant, const TrainConfig& cfg) {
  cfg.validate();
  retain_large_allocations();
  require(!train_set.empty(), "training split is empty");
  require(!val_set.empty(), "validation split is empty");

  TrainResult result;
  Model<float> params = init_model<float>(variant, cfg.shape, cfg.seed);
  Model<float> grads = params.zeros_like();
  OptimState state = make_optim_state(params);
  const BackwardOptions opt{cfg.detach_reflection};

  EpochLog initial{0, mean_objective(params, train_set), mean_transmission_loss(params, val_set)};
  check_finite(initial.train_loss, 0, 0);
  result.log.push_back(initial);
  result.best = params;
  double best_val = initial.val_loss;

  std::vector<std::size_t> order(train_set.size());
  Rng shuffle(cfg.seed, "shuffle");
  TrainConfig step_cfg = cfg;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    step_cfg.learning_rate = cfg.learning_rate_at(epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      zero(grads);
      for (std::size_t i = start; i < end; ++i) {
        const double loss = model_backward(params, train_set[order[i]], grads, opt).total();
        check_finite(loss, epoch, order[i]);
        sum += loss;
      }
      if (end - start > 1) scale(grads, 1.0f / static_cast<float>(end - start));
      adam_step(params, grads, state, step_cfg);
    }
    EpochLog entry{epoch, sum / static_cast<double>(order.size()), mean_transmission_loss(params, val_set)};
    check_finite(entry.val_loss, epoch, 0);
    result.log.push_back(entry);
    if (entry.val_loss < best_val) {
      best_val = entry.val_loss;
      result.best = params;
      result.best_epoch = epoch;
    }
  }
  result.last = std::move(params);
  return result;
}

std::string format_loss_log(const std::vector<EpochLog>& log) {
  std::string out = "epoch,train_loss,val_loss\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_loss);
    out += buf;
  }
  return out;
}

namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Tensor<float> pad_to(const SrgbImage& img, int height, int width) {
  Tensor<float> t(img.channels, height, width);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) t.at(c, y, x) = img.at(mirror(x, img.width), mirror(y, img.height), c);
  return t;
}

SrgbImage crop_clamp(const Tensor<float>& t, int height, int width) {
  SrgbImage img(width, height, t.channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < t.channels; ++c) img.at(x, y, c) = std::clamp(t.at(c, y, x), 0.0f, 1.0f);
  return img;
}

}  // namespace

Inference infer(const Model<float>& m, const SrgbImage& ambient, const SrgbImage* guide) {
  require(ambient.channels == 3 && ambient.width > 0 && ambient.height > 0, "ambient image must be non-empty RGB");
  if (guide) require(guide->same_shape(ambient), "guide image is misaligned with the ambient image");
  const int div = m.nets.front().arch.divisor();
  const int h = (ambient.height + div - 1) / div * div;
  const int w = (ambient.width + div - 1) / div * div;
  const Tensor<float> a = pad_to(ambient, h, w);
  std::optional<Tensor<float>> g;
  if (guide) g = pad_to(*guide, h, w);
  const ForwardPass<float> pass = model_forward(m, a, g ? &*g : nullptr);
  Inference out;
  out.transmission = crop_clamp(pass.transmission, ambient.height, ambient.width);
  if (pass.reflection) out.reflection = crop_clamp(*pass.reflection, ambient.height, ambient.width);
  return out;
}

}  // namespace flashsep::nn
