// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/nn/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "flashsep/nn/model.hpp"
#include "flashsep/rng.hpp"

namespace flashsep::nn {

namespace {

using Signs = std::vector<unsigned char>;

struct Eval {
  double loss = 0.0;
  Signs signs;
};

void append_signs(Signs& s, const Tensor<double>& y) {
  for (double v : y.data) s.push_back(v > 0.0 ? 1 : 0);
}

void append_signs(Signs& s, const UNetCache<double>& cache) {
  // The head output is not activated.
  for (std::size_t i = 0; i + 1 < cache.out.size(); ++i) append_signs(s, cache.out[i]);
}

GradcheckEntry check(std::string name, const std::vector<double*>& params, const std::vector<double>& analytic,
                     const std::function<Eval()>& f, double h) {
  GradcheckEntry e;
  e.name = std::move(name);
  const Eval base = f();
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& p = *params[i];
    const double old = p;
    p = old + h;
    const Eval plus = f();
    p = old - h;
    const Eval minus = f();
    p = old;
    if (plus.signs != base.signs || minus.signs != base.signs) {
      ++e.skipped;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * h);
    e.max_rel_error = std::max(e.max_rel_error, relative_error(analytic[i], numeric));
    ++e.checked;
  }
  return e;
}

Tensor<double> random_tensor(Rng& rng, int c, int h, int w, double lo, double hi) {
  Tensor<double> t(c, h, w);
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

void randomize(Conv2d<double>& conv, Rng& rng) {
  const double sd = std::sqrt(2.0 / conv.fan_in());
  for (auto& w : conv.weight) w = sd * rng.normal();
  for (auto& b : conv.bias) b = 0.1 * rng.normal();
}

void collect(Conv2d<double>& conv, std::vector<double*>& out) {
  for (auto& w : conv.weight) out.push_back(&w);
  for (auto& b : conv.bias) out.push_back(&b);
}

void collect(const Conv2d<double>& conv, std::vector<double>& out) {
  out.insert(out.end(), conv.weight.begin(), conv.weight.end());
  out.insert(out.end(), conv.bias.begin(), conv.bias.end());
}

void collect(Tensor<double>& t, std::vector<double*>& out) {
  for (auto& v : t.data) out.push_back(&v);
}

GradcheckEntry check_conv(const std::string& name, int in, int out, int k, int s, const GradcheckOptions& opt,
                          Rng& rng) {
  Conv2d<double> conv(in, out, k, s);
  randomize(conv, rng);
  Tensor<double> x = random_tensor(rng, in, opt.size, opt.size, -1.0, 1.0);
  const Tensor<double> target =
      random_tensor(rng, out, conv.out_extent(opt.size), conv.out_extent(opt.size), -1.0, 1.0);

  Conv2d<double> grad(in, out, k, s);
  ConvCache<double> cache;
  const Tensor<double> y = conv2d_forward(conv, x, cache);
  const Tensor<double> dx = conv2d_backward(conv, cache, l2_loss_grad(y, target), grad);

  std::vector<double*> params;
  std::vector<double> analytic;
  collect(conv, params);
  collect(grad, analytic);
  collect(x, params);
  analytic.insert(analytic.end(), dx.data.begin(), dx.data.end());
  return check(name, params, analytic,
               [&] {
                 ConvCache<double> c;
                 return Eval{l2_loss(conv2d_forward(conv, x, c), target), {}};
               },
               opt.step);
}

GradcheckEntry check_leaky(const GradcheckOptions& opt, Rng& rng) {
  const double slope = 0.2;
  Tensor<double> x = random_tensor(rng, 2, opt.size, opt.size, -1.0, 1.0);
  const Tensor<double> target = random_tensor(rng, 2, opt.size, opt.size, -1.0, 1.0);
  Tensor<double> y = x;
  leaky_relu_inplace(y, slope);
  Tensor<double> dx = l2_loss_grad(y, target);
  leaky_relu_backward_inplace(dx, y, slope);
  std::vector<double*> params;
  collect(x, params);
  return check("leaky_relu", params, dx.data,
               [&] {
                 Tensor<double> v = x;
                 leaky_relu_inplace(v, slope);
                 Eval e{l2_loss(v, target), {}};
                 append_signs(e.signs, v);
                 return e;
               },
               opt.step);
}

GradcheckEntry check_upsample(const GradcheckOptions& opt, Rng& rng) {
  Tensor<double> x = random_tensor(rng, 2, opt.size / 2, opt.size / 2, -1.0, 1.0);
  const Tensor<double> target = random_tensor(rng, 2, opt.size, opt.size, -1.0, 1.0);
  const Tensor<double> dx = upsample2x_backward(l2_loss_grad(upsample2x(x), target));
  std::vector<double*> params;
  collect(x, params);
  return check("upsample2x", params, dx.data, [&] { return Eval{l2_loss(upsample2x(x), target), {}}; }, opt.step);
}

GradcheckEntry check_l2(const GradcheckOptions& opt, Rng& rng) {
  Tensor<double> pred = random_tensor(rng, 3, opt.size, opt.size, 0.0, 1.0);
  const Tensor<double> target = random_tensor(rng, 3, opt.size, opt.size, 0.0, 1.0);
  const Tensor<double> g = l2_loss_grad(pred, target);
  std::vector<double*> params;
  collect(pred, params);
  return check("l2_loss", params, g.data, [&] { return Eval{l2_loss(pred, target), {}}; }, opt.step);
}

UNetArch micro_arch(const GradcheckOptions& opt, int in_channels) {
  UNetArch a;
  a.levels = static_cast<int>(opt.channels.size());
  a.channels = opt.channels;
  a.in_channels = in_channels;
  return a;
}

GradcheckEntry check_unet(const GradcheckOptions& opt, Rng& rng) {
  UNet<double> net = init_unet<double>(micro_arch(opt, 3), derive_seed(opt.seed, "unet"));
  for (auto& layer : net.layers)
    for (auto& b : layer.bias) b = 0.1 * rng.normal();
  Tensor<double> x = random_tensor(rng, 3, opt.size, opt.size, 0.0, 1.0);
  const Tensor<double> target = random_tensor(rng, 3, opt.size, opt.size, 0.0, 1.0);

  UNet<double> grads = net.zeros_like();
  UNetCache<double> cache;
  const Tensor<double> y = unet_forward(net, x, cache);
  const Tensor<double> dx = unet_backward(net, cache, l2_loss_grad(y, target), grads);

  std::vector<double*> params;
  std::vector<double> analytic;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    collect(net.layers[l], params);
    collect(grads.layers[l], analytic);
  }
  collect(x, params);
  analytic.insert(analytic.end(), dx.data.begin(), dx.data.end());
  return check("unet", params, analytic,
               [&] {
                 UNetCache<double> c;
                 Eval e{l2_loss(unet_forward(net, x, c), target), {}};
                 append_signs(e.signs, c);
                 return e;
               },
               opt.step);
}

GradcheckEntry check_model(Variant variant, const GradcheckOptions& opt, Rng& rng) {
  NetShape shape;
  shape.levels = static_cast<int>(opt.channels.size());
  shape.channels = opt.channels;
  Model<double> m = init_model<double>(variant, shape, derive_seed(opt.seed, to_string(variant)));
  for (auto& net : m.nets)
    for (auto& layer : net.layers)
      for (auto& b : layer.bias) b = 0.1 * rng.normal();
  SampleTensors<double> s;
  const int n = opt.size;
  s.ambient = random_tensor(rng, 3, n, n, 0.0, 1.0);
  s.flash = random_tensor(rng, 3, n, n, 0.0, 1.0);
  s.flash_only = random_tensor(rng, 3, n, n, 0.0, 1.0);
  s.transmission = random_tensor(rng, 3, n, n, 0.0, 1.0);
  s.reflection = random_tensor(rng, 3, n, n, 0.0, 1.0);

  Model<double> grads = m.zeros_like();
  model_backward(m, s, grads);

  std::vector<double*> params;
  std::vector<double> analytic;
  for (std::size_t k = 0; k < m.nets.size(); ++k)
    for (std::size_t l = 0; l < m.nets[k].layers.size(); ++l) {
      collect(m.nets[k].layers[l], params);
      collect(grads.nets[k].layers[l], analytic);
    }
  return check(std::string(to_string(variant)), params, analytic,
               [&] {
                 const ForwardPass<double> pass = model_forward(m, s.ambient, guide_tensor(m.variant, s));
                 Eval e{model_loss(pass, s).total(), {}};
                 append_signs(e.signs, pass.first);
                 append_signs(e.signs, pass.second);
                 return e;
               },
               opt.step);
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-10) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

bool GradcheckReport::passed() const {
  if (entries.empty()) return false;
  for (const auto& e : entries)
    if (e.checked == 0 || !(e.max_rel_error < threshold)) return false;
  return true;
}

std::string GradcheckReport::format() const {
  std::string out;
  char buf[256];
  for (const auto& e : entries) {
    const bool ok = e.checked > 0 && e.max_rel_error < threshold;
    std::snprintf(buf, sizeof buf, "%-14s checked=%zu skipped=%zu max_rel_error=%.3e %s\n", e.name.c_str(), e.checked,
                  e.skipped, e.max_rel_error, ok ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  require(opt.step > 0.0, "gradcheck: step must be positive");
  require(!opt.channels.empty(), "gradcheck: micro-net needs at least one level");
  const int div = 1 << (opt.channels.size() - 1);
  require(opt.size >= 2 && opt.size % std::max(div, 2) == 0, "gradcheck: input size must be divisible by the net divisor");
  Rng rng(opt.seed, "gradcheck");
  GradcheckReport r;
  r.threshold = opt.threshold;
  r.entries.push_back(check_conv("conv3x3", 2, 3, 3, 1, opt, rng));
  r.entries.push_back(check_conv("conv3x3_s2", 2, 3, 3, 2, opt, rng));
  r.entries.push_back(check_conv("conv1x1", 3, 2, 1, 1, opt, rng));
  r.entries.push_back(check_leaky(opt, rng));
  r.entries.push_back(check_upsample(opt, rng));
  r.entries.push_back(check_l2(opt, rng));
  r.entries.push_back(check_unet(opt, rng));
  for (Variant v : {Variant::TwoStageFo, Variant::TwoStageF, Variant::SingleIa, Variant::BaseFo, Variant::BaseF})
    r.entries.push_back(check_model(v, opt, rng));
  return r;
}

}  // namespace flashsep::nn
