// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// SceneSpec as `key = value` text. Textures live next to the spec file and
// are referenced by relative path: PFM holds linear albedo/maps, PPM holds
// display-referred albedo decoded with a 2.2 power law.

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "flashsep/scene.hpp"

namespace flashsep {

/// Parses `key = value` lines; '#' starts a comment. Duplicate keys are rejected.
std::map<std::string, std::string> parse_key_values(const std::string& text);

SceneSpec read_scene_spec(const std::filesystem::path& path);

/// Writes the spec and its textures (<stem>_albedo_t.pfm, ...) into the
/// spec file's directory.
void write_scene_spec(const std::filesystem::path& path, const SceneSpec& spec);

}  // namespace flashsep
