// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "flashsep/error.hpp"
#include "flashsep/image.hpp"
#include "flashsep/nn/model.hpp"

namespace flashsep {

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(std::span<const float> a, std::span<const float> b, double peak = 1.0);

template <class Space>
double psnr(const BasicImage<Space>& a, const BasicImage<Space>& b, double peak = 1.0) {
  require(a.same_shape(b), "psnr: image shapes differ");
  return psnr(std::span<const float>(a.data), std::span<const float>(b.data), peak);
}

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Single-channel SSIM over valid 11x11 Gaussian window positions, peak 1.
double ssim_plane(std::span<const float> a, std::span<const float> b, int width, int height, int stride = 1,
                  int offset = 0);

/// Mean of per-channel SSIM.
template <class Space>
double ssim(const BasicImage<Space>& a, const BasicImage<Space>& b) {
  require(a.same_shape(b), "ssim: image shapes differ");
  require(a.width >= kSsimWindow && a.height >= kSsimWindow, "ssim: images must be at least 11x11");
  double sum = 0.0;
  for (int c = 0; c < a.channels; ++c)
    sum += ssim_plane(a.data, b.data, a.width, a.height, a.channels, c);
  return sum / a.channels;
}

struct EvalRow {
  std::string variant;  // "input_ia" for the do-nothing row
  std::vector<std::string> sample_ids;
  std::vector<double> psnr, ssim;
  double psnr_mean = 0.0;
  double ssim_mean = 0.0;
  std::size_t n() const { return sample_ids.size(); }
};

struct EvalReport {
  std::vector<EvalRow> rows;
  const EvalRow& row(std::string_view variant) const;
};

inline constexpr const char* kInputRow = "input_ia";

struct EvalSample {
  std::string id;
  nn::SampleTensors<float> tensors;
};

/// One row for the ambient input itself plus one per model, each scored
/// against the transmission target.
EvalReport evaluate(const std::vector<EvalSample>& samples, const std::vector<nn::Model<float>>& models);

std::string format_per_sample_csv(const EvalReport& r);
std::string format_summary_csv(const EvalReport& r);
std::string format_summary_text(const EvalReport& r);

/// Text form of a metric value; "inf" for the identical-image sentinel.
std::string format_metric(double v);

}  // namespace flashsep
