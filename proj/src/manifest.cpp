// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/manifest.hpp"

#include <algorithm>
#include <sstream>

#include "flashsep/image_io.hpp"

namespace flashsep {

std::vector<const ManifestRecord*> Manifest::with_role(Role role) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records)
    if (r.role == role) out.push_back(&r);
  return out;
}

void Manifest::normalize() {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < records.size(); ++i)
    require(records[i].id != records[i - 1].id, "manifest: duplicate id '" + records[i].id + "'");
}

std::string format_manifest(const Manifest& m) {
  std::ostringstream os;
  for (const auto& r : m.records) {
    os << r.id << '\t' << to_string(r.role) << '\t' << r.i_a << '\t' << r.i_f << '\t' << r.i_fo << '\t' << r.t_a
       << '\t' << r.r_a << '\t' << r.raw_a << '\t' << r.raw_f << '\n';
  }
  return os.str();
}

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    require(fields.size() == 9, "manifest line " + std::to_string(lineno) + ": expected 9 tab-separated fields");
    ManifestRecord r;
    r.id = fields[0];
    r.role = parse_role(fields[1]);
    r.i_a = fields[2];
    r.i_f = fields[3];
    r.i_fo = fields[4];
    r.t_a = fields[5];
    r.r_a = fields[6];
    r.raw_a = fields[7];
    r.raw_f = fields[8];
    m.records.push_back(std::move(r));
  }
  m.normalize();
  return m;
}

void write_manifest(const std::filesystem::path& path, Manifest m) {
  m.normalize();
  write_file_bytes(path, format_manifest(m));
}

Manifest read_manifest(const std::filesystem::path& path) { return parse_manifest(read_file_bytes(path)); }

ManifestRecord standard_record(const std::string& id, Role role) {
  ManifestRecord r;
  r.id = id;
  r.role = role;
  r.i_a = id + "/i_a.pfm";
  r.i_f = id + "/i_f.pfm";
  r.i_fo = id + "/i_fo.pfm";
  r.t_a = id + "/t_a.pfm";
  r.r_a = id + "/r_a.pfm";
  r.raw_a = id + "/raw_a.fraw";
  r.raw_f = id + "/raw_f.fraw";
  return r;
}

void write_sample(const std::filesystem::path& dir, const std::string& id, const SampleSet& s) {
  const auto d = dir / id;
  std::filesystem::create_directories(d);
  write_pfm(d / "i_a.pfm", s.i_a);
  write_pfm(d / "i_f.pfm", s.i_f);
  write_pfm(d / "i_fo.pfm", s.i_fo);
  write_pfm(d / "t_a.pfm", s.t_a);
  write_pfm(d / "r_a.pfm", s.r_a);
  if (!s.t_fo.data.empty()) write_pfm(d / "t_fo.pfm", s.t_fo);
  if (!s.r_fo.data.empty()) write_pfm(d / "r_fo.pfm", s.r_fo);
  write_fraw(d / "raw_a.fraw", s.raw_a);
  write_fraw(d / "raw_f.fraw", s.raw_f);
  write_mask_pgm(d / "mask.pgm", s.mask);
}

SampleSet load_sample(const std::filesystem::path& manifest_dir, const ManifestRecord& rec) {
  SampleSet s;
  s.spec_id = rec.id;
  s.i_a = read_pfm<LinearSpace>(manifest_dir / rec.i_a);
  s.i_f = read_pfm<LinearSpace>(manifest_dir / rec.i_f);
  s.i_fo = read_pfm<LinearSpace>(manifest_dir / rec.i_fo);
  s.t_a = read_pfm<LinearSpace>(manifest_dir / rec.t_a);
  s.r_a = read_pfm<LinearSpace>(manifest_dir / rec.r_a);
  s.raw_a = read_fraw(manifest_dir / rec.raw_a);
  s.raw_f = read_fraw(manifest_dir / rec.raw_f);
  const auto fo_dir = (manifest_dir / rec.i_fo).parent_path();
  if (std::filesystem::exists(fo_dir / "t_fo.pfm")) s.t_fo = read_pfm<LinearSpace>(fo_dir / "t_fo.pfm");
  if (std::filesystem::exists(fo_dir / "r_fo.pfm")) s.r_fo = read_pfm<LinearSpace>(fo_dir / "r_fo.pfm");
  s.mask = subtract_flash_only(s.raw_f, s.raw_a).mask;
  require(s.i_a.same_shape(s.t_a) && s.i_a.same_shape(s.r_a) && s.i_a.same_shape(s.i_f) && s.i_a.same_shape(s.i_fo),
          "sample '" + rec.id + "': image shapes differ");
  return s;
}

}  // namespace flashsep
