// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "flashsep/raw.hpp"
#include "flashsep/rng.hpp"

namespace flashsep::test {

/// Fresh, empty scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("flashsep_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline RawMetadata camera_meta(Cfa cfa = Cfa::RGGB) {
  RawMetadata m;
  m.cfa = cfa;
  m.black_level = 64;
  m.white_level = 4095;
  return m;
}

inline RawImage random_raw(int w, int h, std::uint64_t seed, int lo = 64, int hi = 4000, Cfa cfa = Cfa::RGGB) {
  RawImage raw(w, h, camera_meta(cfa));
  Rng rng(seed);
  for (auto& v : raw.data) v = static_cast<std::uint16_t>(lo + rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  return raw;
}

}  // namespace flashsep::test
