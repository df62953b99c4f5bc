// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Physically based flash/ambient glass scenes.
//
// A fronto-parallel transmission plane sits behind a glass pane with
// reflectance r and transmittance t = 1 - r; a reflection plane sits on the
// camera side. The flash is placed at the glass. Ambient light reaches the
// camera through one transmission (T_a) or one reflection (R_a); flash light
// has to cross the glass twice for the transmission layer (t^2) and bounce
// twice for the reflection layer (r^2), and falls off with squared distance.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flashsep/image.hpp"
#include "flashsep/raw.hpp"

namespace flashsep {

struct HighlightSpot {
  double cx = 0, cy = 0;    // pixels
  double radius = 1;        // Gaussian sigma, pixels
  double strength = 0;      // peak linear intensity
};

struct DustTexture {
  double strength = 0;      // linear intensity of a fully lit speck
  double density = 0.01;    // fraction of pixels seeded with a speck
  std::uint64_t seed = 0;
};

struct SceneArtifacts {
  std::optional<HighlightSpot> highlight;  // glass highlight, flash frame only
  std::optional<DustTexture> dust;         // illuminated dust, flash-only layer
  double noise_sigma = 0.0;                // raw read noise, normalized units
};

struct CameraModel {
  Cfa cfa = Cfa::RGGB;
  int black_level = 64;
  int white_level = 4095;
  Vec3 wb_gains = {1, 1, 1};
  Mat3 ccm = kIdentity3;

  RawMetadata raw_metadata() const;
};

struct SceneSpec {
  std::string id = "scene";
  int width = 0;
  int height = 0;
  LinearImage albedo_t;        // 3-ch Lambertian albedo of the transmission plane
  LinearImage albedo_r;        // 3-ch albedo of the camera-side reflection plane
  double r = 0.1;              // glass reflectance, t = 1 - r
  LinearImage d_t;             // 1-ch glass-to-transmission distance, meters
  double d_r = 1.0;            // glass-to-reflection distance, meters
  double flash_power = 0.0;
  Vec3 flash_color = {1, 1, 1};
  double ambient_level = 0.0;
  Vec3 ambient_color = {1, 1, 1};
  double reflection_ambient_gain = 1.0;  // ambient on the camera side relative to the far side
  LinearImage cos_map;         // 1-ch incidence factor in [0, 1]
  LinearImage flash_occlusion; // optional 1-ch multiplier on flash irradiance (cast shadows)
  SceneArtifacts artifacts;
  CameraModel camera;
  std::uint64_t noise_seed = 0;

  double t() const { return 1.0 - r; }
  void validate() const;
};

LinearImage constant_map(int width, int height, float value);

struct SampleSet {
  std::string spec_id;
  LinearImage i_a, i_f, i_fo, t_a, r_a;  // linear ground truth, 3-ch
  LinearImage t_fo, r_fo;                // flash-only layer components
  RawImage raw_a, raw_f;
  SaturationMask mask;
};

/// P / d^2.
double irradiance_falloff(double power, double distance);

/// Lambertian reflection (f_r = albedo / pi) of a collimated irradiance.
Vec3 shade_lambertian(const Vec3& albedo, const Vec3& irradiance, double cos_incidence);

SampleSet render_scene(const SceneSpec& spec);

/// CFA sampling + Gaussian read noise (counter-based, keyed) + quantization.
RawImage mosaic(const LinearImage& rgb, const RawMetadata& meta, double noise_sigma,
                std::uint64_t noise_key = 0);
RawImage mosaic(const LinearImage& rgb, Cfa cfa, int black_level, int white_level,
                double noise_sigma, std::uint64_t noise_key = 0);

/// Mean luma of the flash-only reflection divided by that of the flash-only
/// transmission.
double reflection_leakage(const SampleSet& s);

template <class Space>
double mean_luma(const BasicImage<Space>& img);

enum class Preset { Default, StrongReflection, WeakReflection, FarTransmission, ColorMismatch };

std::string_view to_string(Preset p);
Preset parse_preset(std::string_view name);

/// Randomized scene of the given preset, fully determined by the seed.
SceneSpec make_preset_scene(Preset preset, int width, int height, std::uint64_t seed);

/// Procedural albedo texture in [0.05, 0.9].
LinearImage random_albedo(int width, int height, std::uint64_t seed);

}  // namespace flashsep
