// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Dataset manifest: UTF-8 text, one tab-separated record per line,
//   id role path_ia path_if path_ifo path_ta path_ra path_rawa path_rawf
// Paths are relative to the manifest's directory. Records are ordered by id.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flashsep/scene.hpp"
#include "flashsep/synth.hpp"

namespace flashsep {

struct ManifestRecord {
  std::string id;
  Role role = Role::Train;
  std::string i_a, i_f, i_fo, t_a, r_a, raw_a, raw_f;
};

struct Manifest {
  std::vector<ManifestRecord> records;

  std::vector<const ManifestRecord*> with_role(Role role) const;
  /// Sorts records by id and rejects duplicate ids.
  void normalize();
};

std::string format_manifest(const Manifest& m);
Manifest parse_manifest(const std::string& text);
void write_manifest(const std::filesystem::path& path, Manifest m);
Manifest read_manifest(const std::filesystem::path& path);

/// Record whose paths follow the sample_store layout under `<id>/`.
ManifestRecord standard_record(const std::string& id, Role role);

/// Writes a sample's images, raws, flash-only components and mask into
/// `dir/<id>/` using the standard file names.
void write_sample(const std::filesystem::path& dir, const std::string& id, const SampleSet& s);

/// Loads the images and raws a record points at; flash-only components and
/// mask are read when present next to i_fo.
SampleSet load_sample(const std::filesystem::path& manifest_dir, const ManifestRecord& rec);

}  // namespace flashsep
