// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Raw-domain arithmetic: linearization, flash-only subtraction and
// saturation masking on mosaiced sensor frames.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flashsep/image.hpp"

namespace flashsep {

enum class Cfa { RGGB, BGGR, GRBG, GBRG };

std::string_view to_string(Cfa cfa);
Cfa parse_cfa(std::string_view name);

/// Color channel (0 = R, 1 = G, 2 = B) carried by photosite (x, y).
int cfa_channel(Cfa cfa, int x, int y);

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

inline constexpr Mat3 kIdentity3 = {1, 0, 0, 0, 1, 0, 0, 0, 1};

struct RawMetadata {
  Cfa cfa = Cfa::RGGB;
  int black_level = 0;
  int white_level = 65535;
  Vec3 wb_gains = {1.0, 1.0, 1.0};
  Mat3 ccm = kIdentity3;
  std::string exposure_tag;

  /// Throws ValidationError when the levels, gains or matrix are unusable.
  void validate() const;
  bool same_levels(const RawMetadata& o) const {
    return black_level == o.black_level && white_level == o.white_level;
  }
};

struct RawImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;
  RawMetadata meta;

  RawImage() = default;
  RawImage(int w, int h, RawMetadata m, std::uint16_t fill = 0);

  std::uint16_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }

  void validate() const;
};

inline constexpr int kDefaultGuardBand = 16;

/// One normalized quantization step for the given levels.
inline double quantization_step(int black_level, int white_level) {
  return 1.0 / static_cast<double>(white_level - black_level);
}

/// (raw - black) / (white - black), clamped to [0, 1]. One-channel Bayer plane.
LinearImage linearize(const RawImage& raw);

/// Inverse of linearize with round-half-up quantization.
RawImage delinearize(const LinearImage& plane, const RawMetadata& meta);
RawImage delinearize(const LinearImage& plane, int black_level, int white_level);

/// Quantize one normalized value to sensor counts.
std::uint16_t quantize(double v, int black_level, int white_level);

SaturationMask saturation_mask(const RawImage& raw, int guard_band = kDefaultGuardBand);

struct FlashOnly {
  LinearImage plane;  // clamp(linearize(flash) - linearize(ambient), 0, 1)
  SaturationMask mask;
};

/// Flash-only Bayer plane from an aligned flash/ambient raw pair. The mask
/// is invalid wherever either input is within guard_band of white level.
FlashOnly subtract_flash_only(const RawImage& flash, const RawImage& ambient,
                              int guard_band = kDefaultGuardBand);

}  // namespace flashsep
