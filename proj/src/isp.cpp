// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/isp.hpp"

#include <algorithm>
#include <cmath>

#include "flashsep/parallel.hpp"

namespace flashsep {
namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

void IspMetadata::validate() const {
  for (double g : wb_gains) require(g > 0.0, "white-balance gains must be positive");
  if (gamma.kind == Gamma::Kind::Power) require(gamma.exponent > 0.0, "gamma exponent must be positive");
  for (int r = 0; r < 3; ++r) {
    const double sum = ccm[r * 3] + ccm[r * 3 + 1] + ccm[r * 3 + 2];
    require(std::abs(sum - 1.0) <= 1e-4, "color matrix rows must sum to 1");
  }
}

IspMetadata metadata_of(const RawImage& raw) {
  IspMetadata m;
  m.wb_gains = raw.meta.wb_gains;
  m.ccm = raw.meta.ccm;
  return m;
}

double srgb_encode(double x) {
  if (x <= 0.0031308) return 12.92 * x;
  return 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double y) {
  if (y <= 12.92 * 0.0031308) return y / 12.92;
  return std::pow((y + 0.055) / 1.055, 2.4);
}

double encode(double linear, const Gamma& gamma) {
  const double x = std::clamp(linear, 0.0, 1.0);
  return gamma.kind == Gamma::Kind::SrgbPiecewise ? srgb_encode(x) : std::pow(x, 1.0 / gamma.exponent);
}

double decode(double encoded, const Gamma& gamma) {
  const double y = std::clamp(encoded, 0.0, 1.0);
  return gamma.kind == Gamma::Kind::SrgbPiecewise ? srgb_decode(y) : std::pow(y, gamma.exponent);
}

LinearImage demosaic(const LinearImage& plane, Cfa cfa) {
  require(plane.channels == 1, "demosaic expects a one-channel Bayer plane");
  require(plane.width % 2 == 0 && plane.height % 2 == 0, "demosaic requires even dimensions");
  const int w = plane.width;
  const int h = plane.height;
  LinearImage out(w, h, 3);
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const int native = cfa_channel(cfa, x, y);
      double sum[3] = {0, 0, 0};
      int count[3] = {0, 0, 0};
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          // Mirroring preserves photosite parity, so the channel of the
          // mirrored sample equals the channel of the virtual position.
          const int sx = mirror(x + dx, w);
          const int sy = mirror(y + dy, h);
          const int c = cfa_channel(cfa, x + dx, y + dy);
          sum[c] += plane.at(sx, sy);
          ++count[c];
        }
      }
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) =
            c == native ? plane.at(x, y) : static_cast<float>(sum[c] / count[c]);
      }
    }
  });
  return out;
}

LinearImage sample_cfa(const LinearImage& rgb, Cfa cfa) {
  require(rgb.channels == 3, "sample_cfa expects 3 channels");
  LinearImage plane(rgb.width, rgb.height, 1);
  for (int y = 0; y < rgb.height; ++y)
    for (int x = 0; x < rgb.width; ++x) plane.at(x, y) = rgb.at(x, y, cfa_channel(cfa, x, y));
  return plane;
}

LinearImage white_balance(const LinearImage& img, const Vec3& gains) {
  require(img.channels == 3, "white balance expects 3 channels");
  for (double g : gains) require(g > 0.0, "white-balance gains must be positive");
  LinearImage out = img;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = clamp01(out.data[i] * gains[i % 3]);
  return out;
}

LinearImage color_correct(const LinearImage& img, const Mat3& ccm) {
  require(img.channels == 3, "color correction expects 3 channels");
  for (double m : ccm) require(std::isfinite(m), "color matrix has non-finite entries");
  for (int r = 0; r < 3; ++r) {
    const double sum = ccm[r * 3] + ccm[r * 3 + 1] + ccm[r * 3 + 2];
    require(std::abs(sum - 1.0) <= 1e-4, "color matrix rows must sum to 1");
  }
  LinearImage out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const float* p = &img.data[i * 3];
    for (int r = 0; r < 3; ++r) {
      const double v = ccm[r * 3] * p[0] + ccm[r * 3 + 1] * p[1] + ccm[r * 3 + 2] * p[2];
      out.data[i * 3 + r] = clamp01(v);
    }
  }
  return out;
}

SrgbImage gamma_encode(const LinearImage& img, const Gamma& gamma) {
  SrgbImage out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = static_cast<float>(encode(img.data[i], gamma));
  return out;
}

LinearImage gamma_decode(const SrgbImage& img, const Gamma& gamma) {
  LinearImage out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = static_cast<float>(decode(img.data[i], gamma));
  return out;
}

SrgbImage process_plane(const LinearImage& plane, Cfa cfa, const IspMetadata& meta) {
  meta.validate();
  const LinearImage rgb = demosaic(plane, cfa);
  return gamma_encode(color_correct(white_balance(rgb, meta.wb_gains), meta.ccm), meta.gamma);
}

SrgbImage run_isp(const RawImage& raw, const IspMetadata& meta) {
  raw.validate();
  return process_plane(linearize(raw), raw.meta.cfa, meta);
}

}  // namespace flashsep
