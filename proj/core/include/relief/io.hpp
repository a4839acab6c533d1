#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "relief/grid.hpp"
#include "relief/maps.hpp"

namespace relief {

enum class DepthFormat { pfm, png16 };

/// ".pfm" -> pfm, ".png" -> png16; anything else throws IoError.
DepthFormat depth_format_from_path(const std::filesystem::path& path);
DepthFormat parse_depth_format(std::string_view name);
std::string_view to_string(DepthFormat format);

/// Linear mapping of 16-bit PNG codes onto pixel heights:
/// depth = code * scale + offset. Stored next to the PNG as JSON.
struct Png16Sidecar {
  double scale = 1.0;
  double offset = 0.0;
};

/// "relief.png" -> "relief.json".
std::filesystem::path sidecar_path(const std::filesystem::path& png_path);

// PFM rows are stored bottom-to-top; "Pf" is one channel, "PF" three. A
// negative scale line means little-endian samples. Masks are not stored:
// masked pixels are written as 0 when their value is non-finite.
DepthMap load_depth(const std::filesystem::path& path, DepthFormat format);
DepthMap load_depth(const std::filesystem::path& path);
void save_depth(const DepthMap& map, const std::filesystem::path& path, DepthFormat format);
void save_depth(const DepthMap& map, const std::filesystem::path& path);

DepthMap decode_pfm_depth(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pfm_depth(const DepthMap& map);

/// PNG16 with an explicit sidecar. A missing sidecar file on load means
/// scale 1, offset 0.
DepthMap decode_png16_depth(std::span<const std::uint8_t> bytes, const Png16Sidecar& sidecar);
/// Quantizes onto [min, max] using the full 16-bit range; the chosen
/// mapping is returned so that it can be written beside the image.
std::vector<std::uint8_t> encode_png16_depth(const DepthMap& map, Png16Sidecar& sidecar_out);

/// Three-channel PFM holding raw normal vectors. Loaded vectors are
/// renormalized (float32 storage loses ~1e-7 of length).
NormalMap load_normals(const std::filesystem::path& path);
void save_normals(const NormalMap& normals, const std::filesystem::path& path);

/// 8-bit grayscale PNG; nonzero = valid.
Mask load_mask(const std::filesystem::path& path);

struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;  // interleaved, row-major
};

std::vector<std::uint8_t> encode_png8(const Image8& image);
Image8 decode_png8(std::span<const std::uint8_t> bytes);
void save_png8(const Image8& image, const std::filesystem::path& path);

struct DepthVisualization {
  Grid<std::uint8_t> pixels;
  /// Set when the valid range is empty (constant map); pixels are then zero.
  bool degenerate = false;
};

/// Affine map of [min, max] over valid pixels onto [0, 255], rounding half
/// away from zero. Masked pixels are 0.
DepthVisualization viz_depth(const DepthMap& map);

/// Normals as an RGB image of their (n+1)/2 encoding.
Image8 viz_normals(const NormalMap& normals);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace relief
