#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "neuroflow/geometry.hpp"
#include "neuroflow/image.hpp"

namespace neuroflow {

/// Reads a binary Netpbm (P5) file with maxval 255. Comment lines in the
/// header are tolerated on input.
LumaFrame read_pgm(const std::filesystem::path& path);

/// Writes "P5\n<w> <h>\n255\n" followed by the raw payload.
void write_pgm(const LumaFrame& frame, const std::filesystem::path& path);

/// Writes a mask as a P5 image with values 0/255.
void write_mask_pgm(const BinaryImage& mask, const std::filesystem::path& path);
BinaryImage read_mask_pgm(const std::filesystem::path& path);

/// Binary P6 writer for visualisations; rgb holds width*height*3 bytes.
void write_ppm(int width, int height, const std::vector<std::uint8_t>& rgb, const std::filesystem::path& path);

/// Middlebury .flo: float32 magic 202021.25, int32 width, int32 height,
/// then interleaved (u,v) float32 pairs, little-endian.
inline constexpr float kFloMagic = 202021.25f;

FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& field, const std::filesystem::path& path);

/// Loads every *.pgm in dir whose stem contains `pattern` (empty = all),
/// ordered by the trailing integer in the file stem.
std::vector<LumaFrame> load_sequence(const std::filesystem::path& dir, const std::string& pattern = "");

/// Text format, one rect per line: "x y w h".
void write_rois(const RoiSet& rois, const std::filesystem::path& path);
RoiSet read_rois(const std::filesystem::path& path);

}  // namespace neuroflow
