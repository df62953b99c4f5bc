// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flashsep {
namespace {

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string next_line(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("FRAW: truncated header");
  return line;
}

void expect_keyword(std::istringstream& ss, const char* keyword) {
  std::string word;
  ss >> word;
  require(word == keyword, std::string("FRAW: expected '") + keyword + "', got '" + word + "'");
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

// Reads one whitespace-delimited token of a PNM/PFM header, skipping comments.
std::string header_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

std::uint8_t to_byte(float v) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(255.0 * c + 0.5));
}

}  // namespace

void write_fraw(std::ostream& os, const RawImage& raw) {
  raw.validate();
  os << "FRAW1\n";
  os << "width " << raw.width << " height " << raw.height << "\n";
  os << "cfa " << to_string(raw.meta.cfa) << "\n";
  os << "black " << raw.meta.black_level << " white " << raw.meta.white_level << "\n";
  os << "wb";
  for (double g : raw.meta.wb_gains) os << ' ' << format_float(g);
  os << "\nccm";
  for (double m : raw.meta.ccm) os << ' ' << format_float(m);
  os << "\nend\n";
  std::string bytes(raw.data.size() * 2, '\0');
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    bytes[2 * i] = static_cast<char>(raw.data[i] & 0xff);
    bytes[2 * i + 1] = static_cast<char>(raw.data[i] >> 8);
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

RawImage read_fraw(std::istream& is) {
  require(next_line(is) == "FRAW1", "FRAW: bad magic");
  RawImage raw;
  {
    std::istringstream ss(next_line(is));
    expect_keyword(ss, "width");
    ss >> raw.width;
    expect_keyword(ss, "height");
    ss >> raw.height;
    require(!ss.fail(), "FRAW: malformed dimensions");
  }
  {
    std::istringstream ss(next_line(is));
    expect_keyword(ss, "cfa");
    std::string name;
    ss >> name;
    raw.meta.cfa = parse_cfa(name);
  }
  {
    std::istringstream ss(next_line(is));
    expect_keyword(ss, "black");
    ss >> raw.meta.black_level;
    expect_keyword(ss, "white");
    ss >> raw.meta.white_level;
    require(!ss.fail(), "FRAW: malformed levels");
  }
  {
    std::istringstream ss(next_line(is));
    expect_keyword(ss, "wb");
    for (double& g : raw.meta.wb_gains) ss >> g;
    require(!ss.fail(), "FRAW: malformed wb");
  }
  {
    std::istringstream ss(next_line(is));
    expect_keyword(ss, "ccm");
    for (double& m : raw.meta.ccm) ss >> m;
    require(!ss.fail(), "FRAW: malformed ccm");
  }
  require(next_line(is) == "end", "FRAW: missing 'end'");
  require(raw.width > 0 && raw.height > 0 && raw.width <= 1 << 16 && raw.height <= 1 << 16,
          "FRAW: implausible dimensions");

  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  std::string bytes(n * 2, '\0');
  is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<std::size_t>(is.gcount()) == bytes.size(), "FRAW: truncated pixel data");
  raw.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    raw.data[i] = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[2 * i]) |
                                             (static_cast<unsigned char>(bytes[2 * i + 1]) << 8));
  }
  raw.validate();
  return raw;
}

void write_fraw(const std::filesystem::path& path, const RawImage& raw) {
  auto os = open_out(path);
  write_fraw(os, raw);
}

RawImage read_fraw(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_fraw(is);
}

template <class Space>
void write_pfm(const std::filesystem::path& path, const BasicImage<Space>& img) {
  require(img.channels == 1 || img.channels == 3, "PFM supports 1 or 3 channels");
  auto os = open_out(path);
  os << (img.channels == 3 ? "PF" : "Pf") << "\n" << img.width << " " << img.height << "\n-1.0\n";
  const std::size_t row = static_cast<std::size_t>(img.width) * img.channels;
  std::string bytes(row * 4, '\0');
  for (int y = img.height - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(img.data[y * row + i]);
      for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
}

template <class Space>
BasicImage<Space> read_pfm(const std::filesystem::path& path) {
  auto is = open_in(path);
  const std::string magic = header_token(is);
  require(magic == "PF" || magic == "Pf", "PFM: bad magic in " + path.string());
  const int channels = magic == "PF" ? 3 : 1;
  const int width = std::stoi(header_token(is));
  const int height = std::stoi(header_token(is));
  const double scale = std::stod(header_token(is));
  require(width > 0 && height > 0, "PFM: bad dimensions");
  const bool little = scale < 0;
  BasicImage<Space> img(width, height, channels);
  const std::size_t row = static_cast<std::size_t>(width) * channels;
  std::string bytes(row * 4, '\0');
  for (int y = height - 1; y >= 0; --y) {
    is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<std::size_t>(is.gcount()) == bytes.size(), "PFM: truncated data");
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const auto byte = static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b]));
        bits |= little ? byte << (8 * b) : byte << (8 * (3 - b));
      }
      img.data[y * row + i] = std::bit_cast<float>(bits);
    }
  }
  return img;
}

template <class Space>
void write_pnm(const std::filesystem::path& path, const BasicImage<Space>& img) {
  require(img.channels == 1 || img.channels == 3, "PNM supports 1 or 3 channels");
  auto os = open_out(path);
  os << (img.channels == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  std::string bytes(img.data.size(), '\0');
  for (std::size_t i = 0; i < img.data.size(); ++i) bytes[i] = static_cast<char>(to_byte(img.data[i]));
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SrgbImage read_pnm(const std::filesystem::path& path) {
  auto is = open_in(path);
  const std::string magic = header_token(is);
  require(magic == "P6" || magic == "P5", "PNM: only binary P5/P6 supported");
  const int channels = magic == "P6" ? 3 : 1;
  const int width = std::stoi(header_token(is));
  const int height = std::stoi(header_token(is));
  const int maxval = std::stoi(header_token(is));
  require(width > 0 && height > 0 && maxval > 0 && maxval <= 255, "PNM: unsupported header");
  SrgbImage img(width, height, channels);
  std::string bytes(img.data.size(), '\0');
  is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<std::size_t>(is.gcount()) == bytes.size(), "PNM: truncated data");
  for (std::size_t i = 0; i < bytes.size(); ++i)
    img.data[i] = static_cast<float>(static_cast<unsigned char>(bytes[i])) / static_cast<float>(maxval);
  return img;
}

void write_mask_pgm(const std::filesystem::path& path, const SaturationMask& mask) {
  auto os = open_out(path);
  os << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  std::string bytes(mask.valid.size(), '\0');
  for (std::size_t i = 0; i < mask.valid.size(); ++i) bytes[i] = mask.valid[i] ? '\xff' : '\0';
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_file_bytes(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  auto os = open_out(path);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template void write_pfm(const std::filesystem::path&, const LinearImage&);
template void write_pfm(const std::filesystem::path&, const SrgbImage&);
template LinearImage read_pfm<LinearSpace>(const std::filesystem::path&);
template SrgbImage read_pfm<DisplaySpace>(const std::filesystem::path&);
template void write_pnm(const std::filesystem::path&, const LinearImage&);
template void write_pnm(const std::filesystem::path&, const SrgbImage&);

}  // namespace flashsep
