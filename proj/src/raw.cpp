// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/raw.hpp"

#include <algorithm>
#include <cmath>

namespace flashsep {

std::string_view to_string(Cfa cfa) {
  switch (cfa) {
    case Cfa::RGGB: return "RGGB";
    case Cfa::BGGR: return "BGGR";
    case Cfa::GRBG: return "GRBG";
    case Cfa::GBRG: return "GBRG";
  }
  return "RGGB";
}

Cfa parse_cfa(std::string_view name) {
  if (name == "RGGB") return Cfa::RGGB;
  if (name == "BGGR") return Cfa::BGGR;
  if (name == "GRBG") return Cfa::GRBG;
  if (name == "GBRG") return Cfa::GBRG;
  throw ValidationError("unknown CFA layout '" + std::string(name) + "'");
}

int cfa_channel(Cfa cfa, int x, int y) {
  // Channel layout of the 2x2 tile, row-major: (0,0) (1,0) (0,1) (1,1).
  static constexpr int kTiles[4][4] = {
      {0, 1, 1, 2},  // RGGB
      {2, 1, 1, 0},  // BGGR
      {1, 0, 2, 1},  // GRBG
      {1, 2, 0, 1},  // GBRG
  };
  return kTiles[static_cast<int>(cfa)][(y & 1) * 2 + (x & 1)];
}

void RawMetadata::validate() const {
  require(black_level >= 0, "black level must be non-negative");
  require(black_level < white_level, "black level must be below white level");
  require(white_level <= 65535, "white level exceeds 16 bits");
  for (double g : wb_gains) require(g > 0.0 && std::isfinite(g), "white-balance gains must be positive");
  for (int r = 0; r < 3; ++r) {
    const double sum = ccm[r * 3] + ccm[r * 3 + 1] + ccm[r * 3 + 2];
    require(std::abs(sum - 1.0) <= 1e-4, "color matrix rows must sum to 1");
  }
}

RawImage::RawImage(int w, int h, RawMetadata m, std::uint16_t fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill), meta(std::move(m)) {}

void RawImage::validate() const {
  meta.validate();
  require(width > 0 && height > 0, "raw image is empty");
  require(width % 2 == 0 && height % 2 == 0, "raw dimensions must be even (full CFA tiles)");
  require(data.size() == static_cast<std::size_t>(width) * height, "raw data length mismatch");
}

LinearImage linearize(const RawImage& raw) {
  require(raw.meta.black_level < raw.meta.white_level, "black level must be below white level");
  LinearImage out(raw.width, raw.height, 1);
  const double black = raw.meta.black_level;
  const double range = raw.meta.white_level - raw.meta.black_level;
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    const double v = (static_cast<double>(raw.data[i]) - black) / range;
    out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

std::uint16_t quantize(double v, int black_level, int white_level) {
  const double counts = black_level + v * (white_level - black_level);
  const double q = std::floor(counts + 0.5);
  return static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
}

RawImage delinearize(const LinearImage& plane, const RawMetadata& meta) {
  require(plane.channels == 1, "delinearize expects a one-channel plane");
  require(meta.black_level < meta.white_level, "black level must be below white level");
  RawImage out(plane.width, plane.height, meta);
  for (std::size_t i = 0; i < plane.data.size(); ++i) {
    const double v = std::clamp(static_cast<double>(plane.data[i]), 0.0, 1.0);
    out.data[i] = quantize(v, meta.black_level, meta.white_level);
  }
  return out;
}

RawImage delinearize(const LinearImage& plane, int black_level, int white_level) {
  RawMetadata meta;
  meta.black_level = black_level;
  meta.white_level = white_level;
  return delinearize(plane, meta);
}

SaturationMask saturation_mask(const RawImage& raw, int guard_band) {
  SaturationMask mask(raw.width, raw.height);
  const int limit = raw.meta.white_level - guard_band;
  for (std::size_t i = 0; i < raw.data.size(); ++i) mask.valid[i] = raw.data[i] < limit ? 1 : 0;
  return mask;
}

FlashOnly subtract_flash_only(const RawImage& flash, const RawImage& ambient, int guard_band) {
  require(flash.width == ambient.width && flash.height == ambient.height,
          "flash/ambient dimensions differ");
  require(flash.meta.cfa == ambient.meta.cfa, "flash/ambient cfa differs");
  require(flash.meta.same_levels(ambient.meta), "flash/ambient black/white levels differ");

  const LinearImage f = linearize(flash);
  const LinearImage a = linearize(ambient);
  FlashOnly out{LinearImage(flash.width, flash.height, 1), SaturationMask(flash.width, flash.height)};
  const int limit = flash.meta.white_level - guard_band;
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    const double d = static_cast<double>(f.data[i]) - static_cast<double>(a.data[i]);
    out.plane.data[i] = static_cast<float>(std::clamp(d, 0.0, 1.0));
    out.mask.valid[i] = (flash.data[i] < limit && ambient.data[i] < limit) ? 1 : 0;
  }
  return out;
}

}  // namespace flashsep
