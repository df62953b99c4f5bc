// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal image signal processor: linearize -> demosaic -> white balance ->
// color correction -> gamma. Every stage clamps to [0, 1].

#pragma once

#include "flashsep/image.hpp"
#include "flashsep/raw.hpp"

namespace flashsep {

struct Gamma {
  enum class Kind { SrgbPiecewise, Power };
  Kind kind = Kind::SrgbPiecewise;
  double exponent = 2.2;  // used by Kind::Power only

  static Gamma srgb() { return {}; }
  static Gamma power(double g) {
    require(g > 0.0, "gamma exponent must be positive");
    return {Kind::Power, g};
  }
};

struct IspMetadata {
  Vec3 wb_gains = {1.0, 1.0, 1.0};
  Mat3 ccm = kIdentity3;
  Gamma gamma;

  void validate() const;
};

/// ISP metadata carried by a raw frame. Flash-only planes have none of their
/// own and are processed with the ambient frame's metadata.
IspMetadata metadata_of(const RawImage& raw);

double srgb_encode(double linear);
double srgb_decode(double encoded);
double encode(double linear, const Gamma& gamma);
double decode(double encoded, const Gamma& gamma);

/// Bilinear demosaic; mirrored borders keep the CFA phase.
LinearImage demosaic(const LinearImage& plane, Cfa cfa);

/// Picks the CFA channel of a 3-channel image at each photosite (no noise,
/// no quantization). The inverse direction of demosaic.
LinearImage sample_cfa(const LinearImage& rgb, Cfa cfa);

LinearImage white_balance(const LinearImage& img, const Vec3& gains);
LinearImage color_correct(const LinearImage& img, const Mat3& ccm);

SrgbImage gamma_encode(const LinearImage& img, const Gamma& gamma = Gamma::srgb());
LinearImage gamma_decode(const SrgbImage& img, const Gamma& gamma = Gamma::srgb());

/// Rec.709 luma of each pixel.
template <class Space>
BasicImage<Space> to_grayscale(const BasicImage<Space>& img) {
  require(img.channels == 3, "grayscale conversion expects 3 channels");
  BasicImage<Space> out(img.width, img.height, 1);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const float* p = &img.data[i * 3];
    out.data[i] = static_cast<float>(0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2]);
  }
  return out;
}

inline constexpr double kLumaWeights[3] = {0.2126, 0.7152, 0.0722};

/// demosaic -> white_balance -> color_correct -> gamma_encode on a linear
/// Bayer plane.
SrgbImage process_plane(const LinearImage& plane, Cfa cfa, const IspMetadata& meta);

/// Full pipeline on a raw frame.
SrgbImage run_isp(const RawImage& raw, const IspMetadata& meta);

}  // namespace flashsep
