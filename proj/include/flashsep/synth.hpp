// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic training data: composite a reflection onto a transmission in
// reverse-gamma (linear) space, split samples into source-disjoint roles,
// and crop oversized samples.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flashsep/image.hpp"
#include "flashsep/scene.hpp"

namespace flashsep {

enum class ReflectionKind { Blurry, Sharp };

struct SynthParams {
  ReflectionKind reflection_kind = ReflectionKind::Blurry;
  double blur_sigma = 2.0;          // pixels, blurry reflections only
  double reflection_weight = 0.6;   // alpha in (0, 1]
  int crop = 0;                     // 0 = no cropping
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  CameraModel camera;

  void validate() const;
};

/// Gamma used to bring display-referred sources back to linear light.
inline constexpr double kSourceGamma = 2.2;

struct SynthResult {
  SampleSet set;
  double clamped_fraction = 0.0;  // pixels where T + R exceeded 1 in any channel
};

SynthResult synthesize_pair(const SrgbImage& transmission, const SrgbImage& flash_only,
                            const SrgbImage& reflection, const SynthParams& params);

/// Normalized separable Gaussian of radius ceil(3 sigma), mirrored borders.
template <class Space>
BasicImage<Space> blur_reflection(const BasicImage<Space>& img, double sigma);

/// Sampled, normalized 1-D Gaussian kernel used by blur_reflection.
std::vector<double> gaussian_kernel(double sigma);

enum class Role { Train, Val, Test };
std::string_view to_string(Role role);
Role parse_role(std::string_view name);

struct Proportions {
  double train = 77.0 / 157.0;
  double val = 30.0 / 157.0;
  double test = 50.0 / 157.0;
};

struct SplitItem {
  std::string id;
  std::vector<std::string> sources;  // texture sources; shared sources stay in one role
};

/// Deterministic seeded split. Items sharing a source are grouped, groups are
/// shuffled and partitioned contiguously. Throws ValidationError when a role
/// with a positive proportion cannot receive any group.
std::map<std::string, Role> split_dataset(std::span<const SplitItem> items, const Proportions& p,
                                          std::uint64_t seed);

/// Samples above this pixel count are randomly cropped for training.
inline constexpr std::size_t kCropThresholdPixels = 640000;

/// Identical crop window (even-aligned, preserving CFA phase) on every image,
/// raw and mask. Samples at or below the threshold are returned unchanged.
SampleSet random_crop(const SampleSet& s, int crop, std::uint64_t seed,
                      std::size_t threshold_pixels = kCropThresholdPixels);

}  // namespace flashsep
