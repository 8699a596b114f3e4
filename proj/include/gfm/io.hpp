#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "gfm/core.hpp"

namespace gfm::io {

namespace fs = std::filesystem;

// Single-channel PFM ("Pf"), little-endian (scale -1), rows stored bottom
// to top. Invalid pixels are written as NaN and read back as invalid.
ScalarField read_pfm(const fs::path& path, FieldRole role = FieldRole::Generic);
void write_pfm(const ScalarField& field, const fs::path& path);
std::string encode_pfm(const ScalarField& field);
ScalarField decode_pfm(std::string_view bytes, FieldRole role = FieldRole::Generic);

// 16-bit grayscale PNG, value = round(meters * 256), 0 = invalid.
ScalarField read_depth_png(const fs::path& path);
void write_depth_png(const ScalarField& depth, const fs::path& path);

// RGB images: PNG (8 or 16 bit, gray or colour, alpha dropped) or binary
// PPM (P6), chosen by file signature on read and by extension on write.
RgbImage read_image(const fs::path& path);
void write_image(const RgbImage& image, const fs::path& path, int bit_depth = 8);

// ASCII PLY with double coordinates and optional uchar colour.
void write_ply(const PointCloud& cloud, const fs::path& path);
std::string encode_ply(const PointCloud& cloud);
PointCloud read_ply(const fs::path& path);
PointCloud decode_ply(std::string_view text);

std::string read_file(const fs::path& path);
// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const fs::path& path, std::string_view bytes);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace gfm::io
