// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flashsep/isp.hpp"
#include "flashsep/rng.hpp"

namespace flashsep {

void SynthParams::validate() const {
  require(blur_sigma >= 0.0, "blur sigma must be non-negative");
  require(reflection_weight > 0.0 && reflection_weight <= 1.0, "reflection weight must lie in (0, 1]");
  require(crop >= 0 && crop % 2 == 0, "crop must be a non-negative even size");
  require(noise_sigma >= 0.0, "noise sigma must be non-negative");
  camera.raw_metadata().validate();
}

std::vector<double> gaussian_kernel(double sigma) {
  require(sigma >= 0.0, "blur sigma must be non-negative");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  const double sum = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= sum;
  return k;
}

namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

template <class Space>
BasicImage<Space> blur_reflection(const BasicImage<Space>& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  if (k.size() == 1) return img;
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width, h = img.height, ch = img.channels;
  BasicImage<Space> tmp(w, h, ch), out(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(reflect_index(x + i, w), y, c);
        tmp.at(x, y, c) = static_cast<float>(acc);
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(x, reflect_index(y + i, h), c);
        out.at(x, y, c) = static_cast<float>(acc);
      }
  return out;
}
template LinearImage blur_reflection(const LinearImage&, double);
template SrgbImage blur_reflection(const SrgbImage&, double);

SynthResult synthesize_pair(const SrgbImage& transmission, const SrgbImage& flash_only,
                            const SrgbImage& reflection, const SynthParams& params) {
  params.validate();
  require(transmission.channels == 3 && transmission.same_shape(flash_only) && transmission.same_shape(reflection),
          "synthesis sources must be aligned 3-channel images");
  require(transmission.width % 2 == 0 && transmission.height % 2 == 0, "synthesis sources need even dimensions");
  const Gamma gamma = Gamma::power(kSourceGamma);

  const SrgbImage r_src = params.reflection_kind == ReflectionKind::Blurry
                              ? blur_reflection(reflection, params.blur_sigma)
                              : reflection;
  SynthResult out;
  SampleSet& s = out.set;
  s.spec_id = "synth-" + std::to_string(params.seed);
  s.t_a = gamma_decode(transmission, gamma);
  s.r_a = gamma_decode(r_src, gamma);
  for (float& v : s.r_a.data) v = static_cast<float>(params.reflection_weight * v);
  s.i_fo = gamma_decode(flash_only, gamma);
  s.t_fo = s.i_fo;
  s.r_fo = LinearImage(s.t_a.width, s.t_a.height, 3);

  s.i_a = LinearImage(s.t_a.width, s.t_a.height, 3);
  s.i_f = LinearImage(s.t_a.width, s.t_a.height, 3);
  std::size_t clamped = 0;
  for (std::size_t p = 0; p < s.t_a.pixel_count(); ++p) {
    bool any = false;
    for (int c = 0; c < 3; ++c) {
      const std::size_t i = p * 3 + c;
      const float sum = s.t_a.data[i] + s.r_a.data[i];
      any |= sum > 1.0f;
      s.i_a.data[i] = std::min(sum, 1.0f);
      s.i_f.data[i] = std::min(s.i_a.data[i] + s.i_fo.data[i], 1.0f);
    }
    clamped += any;
  }
  out.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(s.t_a.pixel_count());

  const RawMetadata meta = params.camera.raw_metadata();
  s.raw_a = mosaic(s.i_a, meta, params.noise_sigma, derive_seed(params.seed, "ambient"));
  s.raw_f = mosaic(s.i_f, meta, params.noise_sigma, derive_seed(params.seed, "flash"));
  s.mask = subtract_flash_only(s.raw_f, s.raw_a).mask;
  if (params.crop > 0) s = random_crop(s, params.crop, derive_seed(params.seed, "crop"));
  return out;
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Train: return "train";
    case Role::Val: return "val";
    case Role::Test: return "test";
  }
  return "train";
}

Role parse_role(std::string_view name) {
  if (name == "train") return Role::Train;
  if (name == "val") return Role::Val;
  if (name == "test") return Role::Test;
  throw ValidationError("unknown role '" + std::string(name) + "'");
}

std::map<std::string, Role> split_dataset(std::span<const SplitItem> items, const Proportions& p,
                                          std::uint64_t seed) {
  require(p.train >= 0 && p.val >= 0 && p.test >= 0, "proportions must be non-negative");
  require(std::abs(p.train + p.val + p.test - 1.0) <= 1e-9, "proportions must sum to 1");

  // Union-find over items; items sharing any source are merged.
  std::vector<std::size_t> parent(items.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::map<std::string, std::size_t> owner;
  std::map<std::string, int> seen_ids;
  for (std::size_t i = 0; i < items.size(); ++i) {
    require(++seen_ids[items[i].id] == 1, "duplicate sample id '" + items[i].id + "'");
    for (const auto& src : items[i].sources) {
      auto [it, inserted] = owner.emplace(src, i);
      if (!inserted) parent[find(i)] = find(it->second);
    }
  }
  std::map<std::string, std::vector<std::string>> by_root_key;
  {
    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < items.size(); ++i) groups[find(i)].push_back(items[i].id);
    for (auto& [root, ids] : groups) {
      std::sort(ids.begin(), ids.end());
      by_root_key[ids.front()] = ids;  // keyed by smallest id: independent of input order
    }
  }
  std::vector<std::vector<std::string>> groups;
  for (auto& [key, ids] : by_root_key) groups.push_back(std::move(ids));

  Rng rng(seed, "split");
  for (std::size_t i = groups.size(); i > 1; --i) std::swap(groups[i - 1], groups[rng.below(i)]);

  const auto n = static_cast<double>(items.size());
  const std::size_t n_train = static_cast<std::size_t>(std::floor(p.train * n + 0.5));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(p.val * n + 0.5));
  std::map<std::string, Role> roles;
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& g : groups) {
    Role role = Role::Test;
    if (counts[0] < n_train) role = Role::Train;
    else if (counts[1] < n_val) role = Role::Val;
    counts[static_cast<int>(role)] += g.size();
    for (const auto& id : g) roles[id] = role;
  }
  const std::size_t n_test = items.size() - std::min(items.size(), n_train + n_val);
  const std::size_t targets[3] = {n_train, n_val, n_test};
  for (int r = 0; r < 3; ++r) {
    if (targets[r] > 0 && counts[r] == 0) {
      throw ValidationError("cannot honor proportions: role '" + std::string(to_string(static_cast<Role>(r))) +
                            "' received no samples (source groups too large)");
    }
  }
  return roles;
}

SampleSet random_crop(const SampleSet& s, int crop, std::uint64_t seed, std::size_t threshold_pixels) {
  const int w = s.i_a.width, h = s.i_a.height;
  if (static_cast<std::size_t>(w) * h <= threshold_pixels) return s;
  require(crop > 0 && crop <= std::min(w, h), "crop larger than the sample");
  require(crop % 2 == 0, "crop must be even to keep the CFA phase");
  Rng rng(seed, "crop");
  const int x0 = 2 * static_cast<int>(rng.below(static_cast<std::uint64_t>((w - crop) / 2 + 1)));
  const int y0 = 2 * static_cast<int>(rng.below(static_cast<std::uint64_t>((h - crop) / 2 + 1)));

  auto crop_raw = [&](const RawImage& raw) {
    RawImage out(crop, crop, raw.meta);
    for (int y = 0; y < crop; ++y)
      for (int x = 0; x < crop; ++x) out.at(x, y) = raw.at(x0 + x, y0 + y);
    return out;
  };
  auto crop_opt = [&](const LinearImage& img) { return img.data.empty() ? img : flashsep::crop(img, x0, y0, crop, crop); };
  SampleSet out;
  out.spec_id = s.spec_id;
  out.i_a = crop_opt(s.i_a);
  out.i_f = crop_opt(s.i_f);
  out.i_fo = crop_opt(s.i_fo);
  out.t_a = crop_opt(s.t_a);
  out.r_a = crop_opt(s.r_a);
  out.t_fo = crop_opt(s.t_fo);
  out.r_fo = crop_opt(s.r_fo);
  out.raw_a = crop_raw(s.raw_a);
  out.raw_f = crop_raw(s.raw_f);
  out.mask = SaturationMask(crop, crop);
  for (int y = 0; y < crop; ++y)
    for (int x = 0; x < crop; ++x)
      out.mask.valid[static_cast<std::size_t>(y) * crop + x] = s.mask.is_valid(x0 + x, y0 + y) ? 1 : 0;
  return out;
}

}  // namespace flashsep
