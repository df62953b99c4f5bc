// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "flashsep/nn/train.hpp"
#include "flashsep/parallel.hpp"

namespace flashsep {

double psnr(std::span<const float> a, std::span<const float> b, double peak) {
  require(a.size() == b.size() && !a.empty(), "psnr: image sizes differ or are empty");
  require(peak > 0.0, "psnr: peak must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

std::vector<double> ssim_kernel() {
  std::vector<double> k(kSsimWindow);
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    k[i] = std::exp(-0.5 * (i - r) * (i - r) / (kSsimSigma * kSsimSigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Valid-position separable filter of a w x h plane.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1, oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h), out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * in[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double ssim_plane(std::span<const float> a, std::span<const float> b, int width, int height, int stride, int offset) {
  require(width >= kSsimWindow && height >= kSsimWindow, "ssim: images must be at least 11x11");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  require(a.size() >= n * stride && b.size() == a.size(), "ssim: plane sizes differ");
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a[i * stride + offset];
    y[i] = b[i * stride + offset];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto k = ssim_kernel();
  const auto mx = filter_valid(x, width, height, k), my = filter_valid(y, width, height, k);
  const auto sxx = filter_valid(xx, width, height, k), syy = filter_valid(yy, width, height, k);
  const auto sxy = filter_valid(xy, width, height, k);
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0), c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
    // Ordered operands keep the score exactly symmetric under FMA contraction.
    const auto [lo, hi] = std::minmax(mx[i], my[i]);
    const auto [vlo, vhi] = std::minmax(vx, vy);
    sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) / ((lo * lo + hi * hi + c1) * (vlo + vhi + c2));
  }
  return sum / static_cast<double>(mx.size());
}

const EvalRow& EvalReport::row(std::string_view variant) const {
  for (const auto& r : rows)
    if (r.variant == variant) return r;
  throw ValidationError("report has no row '" + std::string(variant) + "'");
}

namespace {

void finish(EvalRow& row) {
  double sp = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < row.n(); ++i) {
    sp += row.psnr[i];
    ss += row.ssim[i];
  }
  row.psnr_mean = sp / static_cast<double>(row.n());
  row.ssim_mean = ss / static_cast<double>(row.n());
}

}  // namespace

EvalReport evaluate(const std::vector<EvalSample>& samples, const std::vector<nn::Model<float>>& models) {
  require(!samples.empty(), "evaluation split is empty");
  const std::size_t n = samples.size();
  std::vector<SrgbImage> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = nn::to_image<DisplaySpace>(samples[i].tensors.transmission);

  auto score = [&](std::string label, auto&& predict) {
    EvalRow row;
    row.variant = std::move(label);
    row.psnr.assign(n, 0.0);
    row.ssim.assign(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
      const SrgbImage pred = predict(i);
      row.psnr[i] = psnr(pred, targets[i]);
      row.ssim[i] = ssim(pred, targets[i]);
    });
    for (const auto& s : samples) row.sample_ids.push_back(s.id);
    finish(row);
    return row;
  };

  EvalReport report;
  report.rows.push_back(
      score(kInputRow, [&](std::size_t i) { return nn::to_image<DisplaySpace>(samples[i].tensors.ambient); }));
  for (const auto& m : models) {
    report.rows.push_back(score(std::string(nn::to_string(m.variant)), [&](std::size_t i) {
      const auto& t = samples[i].tensors;
      const SrgbImage ambient = nn::to_image<DisplaySpace>(t.ambient);
      const nn::Tensor<float>* g = nn::guide_tensor(m.variant, t);
      if (!g) return nn::infer(m, ambient, nullptr).transmission;
      const SrgbImage guide = nn::to_image<DisplaySpace>(*g);
      return nn::infer(m, ambient, &guide).transmission;
    }));
  }
  return report;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_per_sample_csv(const EvalReport& r) {
  std::string out = "variant,sample_id,psnr,ssim\n";
  for (const auto& row : r.rows)
    for (std::size_t i = 0; i < row.n(); ++i)
      out += row.variant + "," + row.sample_ids[i] + "," + format_metric(row.psnr[i]) + "," +
             format_metric(row.ssim[i]) + "\n";
  return out;
}

std::string format_summary_csv(const EvalReport& r) {
  std::string out = "variant,n,psnr_mean,ssim_mean\n";
  for (const auto& row : r.rows)
    out += row.variant + "," + std::to_string(row.n()) + "," + format_metric(row.psnr_mean) + "," +
           format_metric(row.ssim_mean) + "\n";
  return out;
}

std::string format_summary_text(const EvalReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %5s %10s %8s %8s\n", "variant", "n", "psnr_mean", "ssim_mean", "lpips");
  out += buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-14s %5zu %10.4f %8.4f %8s\n", row.variant.c_str(), row.n(), row.psnr_mean,
                  row.ssim_mean, "absent");
    out += buf;
  }
  out += "lpips: absent (needs pretrained perceptual weights)\n";
  return out;
}

}  // namespace flashsep
