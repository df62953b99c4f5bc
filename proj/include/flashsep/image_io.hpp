// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// File formats: FRAW raw container, PFM float images, PPM/PGM previews.
//
// FRAW layout (ASCII header, one item per line, '\n' terminated):
//   FRAW1
//   width <int> height <int>
//   cfa <RGGB|BGGR|GRBG|GBRG>
//   black <int> white <int>
//   wb <f> <f> <f>
//   ccm <9 floats row-major>
//   end
// followed by width*height little-endian uint16 values, row-major.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "flashsep/image.hpp"
#include "flashsep/raw.hpp"

namespace flashsep {

void write_fraw(std::ostream& os, const RawImage& raw);
RawImage read_fraw(std::istream& is);
void write_fraw(const std::filesystem::path& path, const RawImage& raw);
RawImage read_fraw(const std::filesystem::path& path);

/// PFM with 1 ("Pf") or 3 ("PF") channels, little-endian (scale -1.0),
/// bottom-to-top row order as the format prescribes.
template <class Space>
void write_pfm(const std::filesystem::path& path, const BasicImage<Space>& img);
template <class Space>
BasicImage<Space> read_pfm(const std::filesystem::path& path);

/// 8-bit binary PPM (3 channels) or PGM (1 channel); value = round(255 v).
template <class Space>
void write_pnm(const std::filesystem::path& path, const BasicImage<Space>& img);
/// Reads P5/P6 with maxval <= 255 into [0, 1].
SrgbImage read_pnm(const std::filesystem::path& path);

void write_mask_pgm(const std::filesystem::path& path, const SaturationMask& mask);

/// Reads a whole file into memory (used for digests and byte comparisons).
std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace flashsep
