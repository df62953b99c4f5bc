// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flashsep/isp.hpp"
#include "flashsep/parallel.hpp"
#include "flashsep/rng.hpp"

namespace flashsep {

RawMetadata CameraModel::raw_metadata() const {
  RawMetadata m;
  m.cfa = cfa;
  m.black_level = black_level;
  m.white_level = white_level;
  m.wb_gains = wb_gains;
  m.ccm = ccm;
  return m;
}

LinearImage constant_map(int width, int height, float value) { return LinearImage(width, height, 1, value); }

void SceneSpec::validate() const {
  require(width > 0 && height > 0 && width % 2 == 0 && height % 2 == 0,
          "scene dimensions must be positive and even");
  auto check_map = [&](const LinearImage& img, int channels, const char* name) {
    require(img.width == width && img.height == height && img.channels == channels,
            std::string("scene map '") + name + "' has the wrong shape");
    for (float v : img.data) require(std::isfinite(v) && v >= 0.0f, std::string("scene map '") + name + "' must be finite and non-negative");
  };
  check_map(albedo_t, 3, "albedo_t");
  check_map(albedo_r, 3, "albedo_r");
  check_map(d_t, 1, "d_t");
  check_map(cos_map, 1, "cos_map");
  for (float v : d_t.data) require(v > 0.0f, "transmission distance must be positive");
  for (float v : cos_map.data) require(v <= 1.0f, "cos_map must lie in [0, 1]");
  if (!flash_occlusion.data.empty()) check_map(flash_occlusion, 1, "flash_occlusion");
  require(r >= 0.0 && r <= 0.5, "glass reflectance must lie in [0, 0.5]");
  require(d_r > 0.0, "reflection distance must be positive");
  require(flash_power >= 0.0 && ambient_level >= 0.0 && reflection_ambient_gain >= 0.0,
          "radiometric inputs must be non-negative");
  for (int c = 0; c < 3; ++c)
    require(flash_color[c] >= 0.0 && ambient_color[c] >= 0.0, "light colors must be non-negative");
  require(artifacts.noise_sigma >= 0.0, "noise sigma must be non-negative");
  camera.raw_metadata().validate();
}

double irradiance_falloff(double power, double distance) {
  require(distance > 0.0, "falloff distance must be positive");
  return power / (distance * distance);
}

Vec3 shade_lambertian(const Vec3& albedo, const Vec3& irradiance, double cos_incidence) {
  Vec3 out;
  for (int c = 0; c < 3; ++c) out[c] = albedo[c] * irradiance[c] * cos_incidence / std::numbers::pi;
  return out;
}

RawImage mosaic(const LinearImage& rgb, const RawMetadata& meta, double noise_sigma, std::uint64_t noise_key) {
  require(rgb.channels == 3, "mosaic expects a 3-channel image");
  require(rgb.width % 2 == 0 && rgb.height % 2 == 0, "mosaic requires even dimensions");
  meta.validate();
  RawImage raw(rgb.width, rgb.height, meta);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      double v = rgb.at(x, y, cfa_channel(meta.cfa, x, y));
      if (noise_sigma > 0.0) {
        const auto counter = static_cast<std::uint64_t>(y) * rgb.width + x;
        v += noise_sigma * counter_normal(noise_key, counter);
      }
      raw.at(x, y) = quantize(std::clamp(v, 0.0, 1.0), meta.black_level, meta.white_level);
    }
  }
  return raw;
}

RawImage mosaic(const LinearImage& rgb, Cfa cfa, int black_level, int white_level, double noise_sigma,
                std::uint64_t noise_key) {
  RawMetadata meta;
  meta.cfa = cfa;
  meta.black_level = black_level;
  meta.white_level = white_level;
  return mosaic(rgb, meta, noise_sigma, noise_key);
}

namespace {

Vec3 pixel3(const LinearImage& img, int x, int y) {
  return {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
}

Vec3 scaled(const Vec3& v, double s) { return {v[0] * s, v[1] * s, v[2] * s}; }

}  // namespace

SampleSet render_scene(const SceneSpec& spec) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;
  const double r = spec.r;
  const double t = spec.t();

  SampleSet s;
  s.spec_id = spec.id;
  s.t_a = LinearImage(w, h, 3);
  s.r_a = LinearImage(w, h, 3);
  s.t_fo = LinearImage(w, h, 3);
  s.r_fo = LinearImage(w, h, 3);
  s.i_a = LinearImage(w, h, 3);
  s.i_fo = LinearImage(w, h, 3);
  s.i_f = LinearImage(w, h, 3);

  const Vec3 ambient_far = scaled(spec.ambient_color, spec.ambient_level);
  const Vec3 ambient_near = scaled(spec.ambient_color, spec.ambient_level * spec.reflection_ambient_gain);
  const Vec3 flash_at_reflection = scaled(spec.flash_color, irradiance_falloff(spec.flash_power, spec.d_r));
  const bool occluded = !spec.flash_occlusion.data.empty();
  const auto& dust = spec.artifacts.dust;
  const auto& spot = spec.artifacts.highlight;

  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 at = pixel3(spec.albedo_t, x, y);
      const Vec3 ar = pixel3(spec.albedo_r, x, y);
      const double cos_i = spec.cos_map.at(x, y);
      double flash_scale = irradiance_falloff(spec.flash_power, spec.d_t.at(x, y));
      if (occluded) flash_scale *= spec.flash_occlusion.at(x, y);

      const Vec3 ta = scaled(shade_lambertian(at, ambient_far, 1.0), t);
      const Vec3 ra = scaled(shade_lambertian(ar, ambient_near, 1.0), r);
      Vec3 tfo = scaled(shade_lambertian(at, scaled(spec.flash_color, flash_scale), cos_i), t * t);
      const Vec3 rfo = scaled(shade_lambertian(ar, flash_at_reflection, cos_i), r * r);

      if (dust) {
        const auto counter = static_cast<std::uint64_t>(y) * w + x;
        const double u = bits_to_unit(splitmix64(dust->seed ^ splitmix64(counter)));
        if (u < dust->density) {
          const double level = dust->strength * (0.5 + 0.5 * u / dust->density);
          for (int c = 0; c < 3; ++c) tfo[c] += level * spec.flash_color[c];
        }
      }
      double highlight = 0.0;
      if (spot) {
        const double dx = x - spot->cx;
        const double dy = y - spot->cy;
        highlight = spot->strength * std::exp(-(dx * dx + dy * dy) / (2.0 * spot->radius * spot->radius));
      }

      for (int c = 0; c < 3; ++c) {
        const float fta = static_cast<float>(ta[c]);
        const float fra = static_cast<float>(ra[c]);
        const float ftfo = static_cast<float>(tfo[c]);
        const float frfo = static_cast<float>(rfo[c]);
        const float fh = static_cast<float>(highlight * spec.flash_color[c]);
        s.t_a.at(x, y, c) = fta;
        s.r_a.at(x, y, c) = fra;
        s.t_fo.at(x, y, c) = ftfo;
        s.r_fo.at(x, y, c) = frfo;
        const float ia = fta + fra;
        const float ifo = ftfo + frfo + fh;
        s.i_a.at(x, y, c) = ia;
        s.i_fo.at(x, y, c) = ifo;
        s.i_f.at(x, y, c) = ia + ifo;
      }
    }
  });

  const RawMetadata meta = spec.camera.raw_metadata();
  const double sigma = spec.artifacts.noise_sigma;
  s.raw_a = mosaic(s.i_a, meta, sigma, derive_seed(spec.noise_seed, "ambient"));
  s.raw_f = mosaic(s.i_f, meta, sigma, derive_seed(spec.noise_seed, "flash"));
  s.raw_a.meta.exposure_tag = "ambient";
  s.raw_f.meta.exposure_tag = "flash";
  s.mask = subtract_flash_only(s.raw_f, s.raw_a).mask;
  return s;
}

template <class Space>
double mean_luma(const BasicImage<Space>& img) {
  require(img.channels == 3, "mean luma expects 3 channels");
  double sum = 0.0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) sum += kLumaWeights[c] * img.data[i * 3 + c];
  return img.pixel_count() ? sum / static_cast<double>(img.pixel_count()) : 0.0;
}
template double mean_luma(const LinearImage&);
template double mean_luma(const SrgbImage&);

double reflection_leakage(const SampleSet& s) {
  require(s.t_fo.same_shape(s.r_fo) && s.t_fo.channels == 3, "sample set lacks flash-only components");
  const double transmission = mean_luma(s.t_fo);
  if (!(transmission > 0.0)) throw ValidationError("flash-only transmission has zero energy");
  return mean_luma(s.r_fo) / transmission;
}

std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::Default: return "default";
    case Preset::StrongReflection: return "strong-reflection";
    case Preset::WeakReflection: return "weak-reflection";
    case Preset::FarTransmission: return "far-transmission";
    case Preset::ColorMismatch: return "color-mismatch";
  }
  return "default";
}

Preset parse_preset(std::string_view name) {
  for (auto p : {Preset::Default, Preset::StrongReflection, Preset::WeakReflection, Preset::FarTransmission,
                 Preset::ColorMismatch})
    if (to_string(p) == name) return p;
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

LinearImage random_albedo(int width, int height, std::uint64_t seed) {
  Rng rng(seed, "albedo");
  auto random_color = [&rng] {
    const double gray = rng.uniform(0.1, 0.85);
    Vec3 c;
    for (auto& v : c) v = gray * rng.uniform(0.6, 1.4);
    return c;
  };
  LinearImage img(width, height, 3);
  // Smooth background gradient.
  const Vec3 c0 = random_color();
  const Vec3 c1 = random_color();
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = 0.5 + 0.5 * ((x / double(width) - 0.5) * ca + (y / double(height) - 0.5) * sa) * 1.4;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(c0[c] + (c1[c] - c0[c]) * u);
    }
  }
  // Overlapping rectangles, ellipses and stripe bands.
  const int shapes = 5 + static_cast<int>(rng.below(8));
  for (int s = 0; s < shapes; ++s) {
    const int kind = static_cast<int>(rng.below(3));
    const Vec3 color = random_color();
    const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
    const double rx = rng.uniform(0.05, 0.3) * width, ry = rng.uniform(0.05, 0.3) * height;
    const double period = rng.uniform(3.0, 10.0);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = x - cx, dy = y - cy;
        bool inside = false;
        if (kind == 0) {
          inside = std::abs(dx) < rx && std::abs(dy) < ry;
        } else if (kind == 1) {
          inside = (dx * dx) / (rx * rx) + (dy * dy) / (ry * ry) < 1.0;
        } else {
          const double along = dx * std::cos(theta) + dy * std::sin(theta);
          const double across = -dx * std::sin(theta) + dy * std::cos(theta);
          inside = std::abs(across) < ry && std::fmod(std::abs(along), period) < period / 2;
        }
        if (inside)
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(color[c]);
      }
    }
  }
  for (auto& v : img.data) v = std::clamp(v, 0.05f, 0.9f);
  return img;
}

namespace {

// Mild saturation boost, rows sum to one.
constexpr Mat3 kCameraCcm = {1.45, -0.35, -0.10, -0.20, 1.40, -0.20, -0.05, -0.40, 1.45};

struct PresetRanges {
  double r_lo, r_hi;
  double gain_lo, gain_hi;        // reflection-side ambient gain
  double flash_lo, flash_hi;      // flash-only / ambient transmission ratio at 1 m
  double dt_lo, dt_hi;            // transmission distance at the image center
  double dr_lo, dr_hi;            // reflection distance relative to d_t
  bool color_mismatch;
  bool artifacts;
};

PresetRanges ranges_for(Preset p) {
  switch (p) {
    case Preset::StrongReflection: return {0.08, 0.15, 4.0, 7.0, 0.5, 1.0, 0.8, 1.3, 0.6, 1.4, false, false};
    case Preset::WeakReflection: return {0.04, 0.10, 0.4, 1.2, 1.0, 2.0, 0.8, 1.3, 0.6, 1.4, false, false};
    case Preset::FarTransmission: return {0.08, 0.15, 2.0, 4.0, 1.0, 1.5, 70.0, 100.0, 0.004, 0.01, false, false};
    case Preset::ColorMismatch: return {0.06, 0.15, 1.0, 4.0, 0.8, 1.6, 0.8, 1.3, 0.6, 1.4, true, true};
    case Preset::Default: break;
  }
  return {0.05, 0.15, 0.8, 5.0, 0.6, 1.8, 0.8, 1.3, 0.6, 1.4, false, true};
}

}  // namespace

SceneSpec make_preset_scene(Preset preset, int width, int height, std::uint64_t seed) {
  const PresetRanges pr = ranges_for(preset);
  Rng rng(seed, "scene");
  SceneSpec s;
  s.id = std::string(to_string(preset)) + "-" + std::to_string(seed);
  s.width = width;
  s.height = height;
  s.albedo_t = random_albedo(width, height, derive_seed(seed, "transmission"));
  s.albedo_r = random_albedo(width, height, derive_seed(seed, "reflection"));
  s.r = rng.uniform(pr.r_lo, pr.r_hi);

  // Distance plane tilted across the frame: uneven flash illumination.
  const double dt_center = rng.uniform(pr.dt_lo, pr.dt_hi);
  const double tilt_x = rng.uniform(-0.25, 0.25), tilt_y = rng.uniform(-0.25, 0.25);
  s.d_t = LinearImage(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      s.d_t.at(x, y) = static_cast<float>(
          dt_center * (1.0 + tilt_x * (x / double(width) - 0.5) + tilt_y * (y / double(height) - 0.5)));
  s.d_r = dt_center * rng.uniform(pr.dr_lo, pr.dr_hi);
  if (preset == Preset::FarTransmission) s.d_r = rng.uniform(0.5, 1.0);

  // Off-axis incidence falls toward the frame border.
  const double ox = rng.uniform(0.3, 0.7) * width, oy = rng.uniform(0.3, 0.7) * height;
  const double focal = rng.uniform(1.2, 2.0) * std::max(width, height);
  s.cos_map = LinearImage(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double rho = std::hypot(x - ox, y - oy) / focal;
      s.cos_map.at(x, y) = static_cast<float>(1.0 / std::sqrt(1.0 + rho * rho));
    }

  // Ambient illuminant; the camera white balance neutralizes it.
  s.ambient_color = {rng.uniform(0.5, 0.75), 1.0, rng.uniform(0.5, 0.8)};
  if (pr.color_mismatch) {
    s.flash_color = {rng.uniform(0.3, 0.5), 1.0, rng.uniform(0.9, 1.2)};
  } else {
    s.flash_color = {rng.uniform(0.6, 0.9), 1.0, rng.uniform(0.7, 0.95)};
  }
  s.ambient_level = std::numbers::pi * rng.uniform(0.3, 0.4);
  s.reflection_ambient_gain = rng.uniform(pr.gain_lo, pr.gain_hi);
  // Flash power set so T_fo ~ ratio * T_a for a surface 1 m away.
  const double ratio = rng.uniform(pr.flash_lo, pr.flash_hi);
  s.flash_power = ratio * s.ambient_level / s.t();

  s.camera.cfa = static_cast<Cfa>(rng.below(4));
  s.camera.black_level = 64;
  s.camera.white_level = 4095;
  s.camera.wb_gains = {1.0 / s.ambient_color[0], 1.0, 1.0 / s.ambient_color[2]};
  s.camera.ccm = kCameraCcm;
  s.artifacts.noise_sigma = 0.002;
  s.noise_seed = derive_seed(seed, "noise");

  if (pr.artifacts) {
    if (rng.uniform() < 0.3) {
      s.artifacts.highlight = HighlightSpot{rng.uniform(0.2, 0.8) * width, rng.uniform(0.2, 0.8) * height,
                                            rng.uniform(0.03, 0.08) * width, rng.uniform(0.2, 0.5)};
    }
    if (rng.uniform() < 0.3) {
      s.artifacts.dust = DustTexture{rng.uniform(0.05, 0.2), rng.uniform(0.002, 0.01), derive_seed(seed, "dust")};
    }
    if (rng.uniform() < 0.3) {
      s.flash_occlusion = constant_map(width, height, 1.0f);
      const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
      const double rx = rng.uniform(0.1, 0.25) * width, ry = rng.uniform(0.1, 0.25) * height;
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const double dx = (x - cx) / rx, dy = (y - cy) / ry;
          if (dx * dx + dy * dy < 1.0) s.flash_occlusion.at(x, y) = 0.2f;
        }
    }
  }
  return s;
}

}  // namespace flashsep
