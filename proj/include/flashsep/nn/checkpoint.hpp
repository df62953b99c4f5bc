// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint file:
//
//   FSEPCKPT1
//   variant <name>
//   levels <L>
//   channels <c0> ... <cL-1>
//   slope <s>
//   seed <u64>
//   epoch <n>
//   tensors <count>
//   end
//
// followed by `count` records of (u32 name length, name bytes, u32 rank,
// u32 dims[rank], f32 values), all little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "flashsep/nn/model.hpp"

namespace flashsep::nn {

struct Checkpoint {
  Model<float> model;
  std::uint64_t seed = 0;
  int epoch = 0;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace flashsep::nn
