// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/scene_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "flashsep/image_io.hpp"
#include "flashsep/isp.hpp"

namespace flashsep {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <std::size_t N>
std::array<double, N> parse_numbers(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  std::array<double, N> out{};
  for (auto& v : out) ss >> v;
  require(!ss.fail(), "scene spec: '" + key + "' expects " + std::to_string(N) + " numbers");
  std::string rest;
  require(!(ss >> rest), "scene spec: trailing data in '" + key + "'");
  return out;
}

double parse_number(const std::string& key, const std::string& value) { return parse_numbers<1>(key, value)[0]; }

LinearImage load_texture(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") return read_pfm<LinearSpace>(path);
  if (ext == ".ppm" || ext == ".pgm") return gamma_decode(read_pnm(path), Gamma::power(2.2));
  throw ValidationError("scene spec: unsupported texture format " + path.string());
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    require(!key.empty(), "line " + std::to_string(lineno) + ": empty key");
    require(kv.emplace(key, trim(line.substr(eq + 1))).second, "duplicate key '" + key + "'");
  }
  return kv;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  const auto kv = parse_key_values(read_file_bytes(path));
  static const std::set<std::string> known = {
      "id", "width", "height", "albedo_t", "albedo_r", "r", "d_t", "d_t_map", "d_r", "flash_power",
      "flash_color", "ambient_level", "ambient_color", "reflection_ambient_gain", "cos", "cos_map",
      "flash_occlusion", "highlight", "dust", "noise_sigma", "noise_seed", "cfa", "black", "white", "wb", "ccm"};
  for (const auto& [key, value] : kv) require(known.contains(key), "scene spec: unknown key '" + key + "'");
  for (const char* key : {"width", "height", "albedo_t", "albedo_r", "d_r", "flash_power", "ambient_level"})
    require(kv.contains(key), std::string("scene spec: missing key '") + key + "'");
  require(kv.contains("d_t") != kv.contains("d_t_map"), "scene spec: exactly one of d_t / d_t_map is required");

  const auto dir = path.parent_path();
  auto get = [&](const char* key) { return kv.at(key); };
  SceneSpec s;
  if (kv.contains("id")) s.id = get("id");
  s.width = static_cast<int>(parse_number("width", get("width")));
  s.height = static_cast<int>(parse_number("height", get("height")));
  s.albedo_t = load_texture(dir / get("albedo_t"));
  s.albedo_r = load_texture(dir / get("albedo_r"));
  if (kv.contains("r")) s.r = parse_number("r", get("r"));
  s.d_t = kv.contains("d_t") ? constant_map(s.width, s.height, static_cast<float>(parse_number("d_t", get("d_t"))))
                             : read_pfm<LinearSpace>(dir / get("d_t_map"));
  s.d_r = parse_number("d_r", get("d_r"));
  s.flash_power = parse_number("flash_power", get("flash_power"));
  if (kv.contains("flash_color")) s.flash_color = parse_numbers<3>("flash_color", get("flash_color"));
  s.ambient_level = parse_number("ambient_level", get("ambient_level"));
  if (kv.contains("ambient_color")) s.ambient_color = parse_numbers<3>("ambient_color", get("ambient_color"));
  if (kv.contains("reflection_ambient_gain"))
    s.reflection_ambient_gain = parse_number("reflection_ambient_gain", get("reflection_ambient_gain"));
  require(!(kv.contains("cos") && kv.contains("cos_map")), "scene spec: give cos or cos_map, not both");
  if (kv.contains("cos_map")) {
    s.cos_map = read_pfm<LinearSpace>(dir / get("cos_map"));
  } else {
    const double c = kv.contains("cos") ? parse_number("cos", get("cos")) : 1.0;
    s.cos_map = constant_map(s.width, s.height, static_cast<float>(c));
  }
  if (kv.contains("flash_occlusion")) s.flash_occlusion = read_pfm<LinearSpace>(dir / get("flash_occlusion"));
  if (kv.contains("highlight")) {
    const auto v = parse_numbers<4>("highlight", get("highlight"));
    s.artifacts.highlight = HighlightSpot{v[0], v[1], v[2], v[3]};
  }
  if (kv.contains("dust")) {
    std::istringstream ss(get("dust"));
    DustTexture d;
    ss >> d.strength >> d.density >> d.seed;
    require(!ss.fail(), "scene spec: 'dust' expects strength density seed");
    s.artifacts.dust = d;
  }
  if (kv.contains("noise_sigma")) s.artifacts.noise_sigma = parse_number("noise_sigma", get("noise_sigma"));
  if (kv.contains("noise_seed")) s.noise_seed = std::stoull(get("noise_seed"));
  if (kv.contains("cfa")) s.camera.cfa = parse_cfa(get("cfa"));
  if (kv.contains("black")) s.camera.black_level = static_cast<int>(parse_number("black", get("black")));
  if (kv.contains("white")) s.camera.white_level = static_cast<int>(parse_number("white", get("white")));
  if (kv.contains("wb")) s.camera.wb_gains = parse_numbers<3>("wb", get("wb"));
  if (kv.contains("ccm")) s.camera.ccm = parse_numbers<9>("ccm", get("ccm"));
  s.validate();
  return s;
}

void write_scene_spec(const std::filesystem::path& path, const SceneSpec& spec) {
  spec.validate();
  const auto dir = path.parent_path();
  const std::string stem = path.stem().string();
  auto texture = [&](const std::string& suffix, const LinearImage& img) {
    const std::string name = stem + "_" + suffix + ".pfm";
    write_pfm(dir / name, img);
    return name;
  };
  std::ostringstream os;
  auto vec = [](const auto& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : " ") + fmt(x);
    return out;
  };
  os << "id = " << spec.id << "\n";
  os << "width = " << spec.width << "\nheight = " << spec.height << "\n";
  os << "albedo_t = " << texture("albedo_t", spec.albedo_t) << "\n";
  os << "albedo_r = " << texture("albedo_r", spec.albedo_r) << "\n";
  os << "r = " << fmt(spec.r) << "\n";
  os << "d_t_map = " << texture("d_t", spec.d_t) << "\n";
  os << "d_r = " << fmt(spec.d_r) << "\n";
  os << "flash_power = " << fmt(spec.flash_power) << "\n";
  os << "flash_color = " << vec(spec.flash_color) << "\n";
  os << "ambient_level = " << fmt(spec.ambient_level) << "\n";
  os << "ambient_color = " << vec(spec.ambient_color) << "\n";
  os << "reflection_ambient_gain = " << fmt(spec.reflection_ambient_gain) << "\n";
  os << "cos_map = " << texture("cos", spec.cos_map) << "\n";
  if (!spec.flash_occlusion.data.empty()) os << "flash_occlusion = " << texture("occlusion", spec.flash_occlusion) << "\n";
  if (const auto& h = spec.artifacts.highlight)
    os << "highlight = " << fmt(h->cx) << " " << fmt(h->cy) << " " << fmt(h->radius) << " " << fmt(h->strength) << "\n";
  if (const auto& d = spec.artifacts.dust)
    os << "dust = " << fmt(d->strength) << " " << fmt(d->density) << " " << d->seed << "\n";
  os << "noise_sigma = " << fmt(spec.artifacts.noise_sigma) << "\n";
  os << "noise_seed = " << spec.noise_seed << "\n";
  os << "cfa = " << to_string(spec.camera.cfa) << "\n";
  os << "black = " << spec.camera.black_level << "\nwhite = " << spec.camera.white_level << "\n";
  os << "wb = " << vec(spec.camera.wb_gains) << "\n";
  os << "ccm = " << vec(spec.camera.ccm) << "\n";
  write_file_bytes(path, os.str());
}

}  // namespace flashsep
