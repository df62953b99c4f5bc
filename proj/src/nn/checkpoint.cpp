// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/nn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "flashsep/image_io.hpp"

namespace flashsep::nn {

namespace {

constexpr const char* kMagic = "FSEPCKPT1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw ValidationError("checkpoint: truncated tensor data");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

std::string header_line(std::istringstream& is, std::string_view key) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("checkpoint: missing header line '" + std::string(key) + "'");
  const std::string prefix = std::string(key) + " ";
  if (line.rfind(prefix, 0) != 0) throw ValidationError("checkpoint: expected '" + std::string(key) + "', got '" + line + "'");
  return line.substr(prefix.size());
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Model<float> m = ckpt.model;
  std::string out;
  char buf[64];
  out += kMagic;
  out += "\nvariant ";
  out += to_string(m.variant);
  out += "\nlevels " + std::to_string(m.shape.levels) + "\nchannels";
  for (int c : m.shape.channels) out += " " + std::to_string(c);
  std::snprintf(buf, sizeof buf, "\nslope %.17g", m.shape.slope);
  out += buf;
  out += "\nseed " + std::to_string(ckpt.seed) + "\nepoch " + std::to_string(ckpt.epoch);
  std::size_t count = 0;
  m.for_each_tensor([&](const std::string&, const std::vector<int>&, std::vector<float>&) { ++count; });
  out += "\ntensors " + std::to_string(count) + "\nend\n";
  m.for_each_tensor([&](const std::string& name, const std::vector<int>& dims, std::vector<float>& values) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  });
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const std::size_t end_pos = bytes.find("\nend\n");
  if (bytes.rfind(kMagic, 0) != 0 || end_pos == std::string::npos)
    throw ValidationError("checkpoint: not a FSEPCKPT1 file");
  std::istringstream is(bytes.substr(0, end_pos + 1));
  std::string magic;
  std::getline(is, magic);
  if (magic != kMagic) throw ValidationError("checkpoint: bad magic '" + magic + "'");

  Checkpoint ckpt;
  const Variant variant = parse_variant(header_line(is, "variant"));
  NetShape shape;
  std::size_t count = 0;
  try {
    shape.levels = std::stoi(header_line(is, "levels"));
    std::istringstream cs(header_line(is, "channels"));
    shape.channels.clear();
    for (int c; cs >> c;) shape.channels.push_back(c);
    shape.slope = std::stod(header_line(is, "slope"));
    ckpt.seed = std::stoull(header_line(is, "seed"));
    ckpt.epoch = std::stoi(header_line(is, "epoch"));
    count = std::stoull(header_line(is, "tensors"));
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ValidationError*>(&e)) throw;
    throw ValidationError(std::string("checkpoint: malformed header number: ") + e.what());
  }
  ckpt.model = init_model<float>(variant, shape, 0);

  Reader r{bytes, end_pos + 5};
  std::size_t seen = 0;
  ckpt.model.for_each_tensor([&](const std::string& name, const std::vector<int>& dims, std::vector<float>& values) {
    const std::string got = r.str(r.u32());
    if (got != name) throw ValidationError("checkpoint: expected tensor '" + name + "', found '" + got + "'");
    const std::uint32_t rank = r.u32();
    if (rank != dims.size()) throw ValidationError("checkpoint: rank mismatch for '" + name + "'");
    for (int d : dims)
      if (r.u32() != static_cast<std::uint32_t>(d)) throw ValidationError("checkpoint: shape mismatch for '" + name + "'");
    for (auto& v : values) v = std::bit_cast<float>(r.u32());
    ++seen;
  });
  if (seen != count) throw ValidationError("checkpoint: header tensor count disagrees with the architecture");
  if (r.pos != bytes.size()) throw ValidationError("checkpoint: trailing bytes after tensor data");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_bytes(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file_bytes(path)); }

}  // namespace flashsep::nn
