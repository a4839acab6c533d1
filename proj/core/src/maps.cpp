#include "relief/maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "relief/error.hpp"

namespace relief {

namespace {

constexpr double kUnitTolerance = 1e-6;
constexpr double kDecodeZFloor = 1e-4;
constexpr std::size_t kMaxReportedPixels = 64;

std::string pixel_list(const std::vector<std::pair<std::size_t, std::size_t>>& pixels) {
  std::string out;
  for (std::size_t i = 0; i < pixels.size() && i < 8; ++i) {
    if (i) out += ", ";
    out += "(" + std::to_string(pixels[i].first) + "," + std::to_string(pixels[i].second) + ")";
  }
  if (pixels.size() > 8) out += ", ...";
  return out;
}

void require_min_size(std::size_t w, std::size_t h, const char* what) {
  if (w < 2 || h < 2) {
    throw DimensionError(std::string(what) + ": grids must be at least 2x2, got " +
                         std::to_string(w) + "x" + std::to_string(h));
  }
}

}  // namespace

DegeneratePixelError::DegeneratePixelError(const std::string& what,
                                           std::vector<std::pair<std::size_t, std::size_t>> pixels)
    : Error(what + " at " + pixel_list(pixels)), pixels_(std::move(pixels)) {}

DepthMap::DepthMap(Grid<double> values, std::optional<Mask> mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  require_min_size(values_.width(), values_.height(), "DepthMap");
  if (mask_) require_same_shape(values_, *mask_, "DepthMap mask");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (valid(i) && !std::isfinite(values_[i])) {
      throw InvariantError("DepthMap: non-finite value at (" +
                           std::to_string(i % values_.width()) + "," +
                           std::to_string(i / values_.width()) + ")");
    }
  }
}

std::size_t DepthMap::valid_count() const {
  if (!mask_) return values_.size();
  return static_cast<std::size_t>(
      std::count_if(mask_->data().begin(), mask_->data().end(), [](auto m) { return m != 0; }));
}

double DepthMap::min_value() const {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (valid(i)) lo = std::min(lo, values_[i]);
  return std::isfinite(lo) ? lo : 0.0;
}

double DepthMap::max_value() const {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (valid(i)) hi = std::max(hi, values_[i]);
  return std::isfinite(hi) ? hi : 0.0;
}

NormalMap::NormalMap(Grid<Vec3> vectors) : vectors_(std::move(vectors)) {
  require_min_size(vectors_.width(), vectors_.height(), "NormalMap");
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    const Vec3& n = vectors_[i];
    const double len = n.norm();
    if (!(std::abs(len - 1.0) <= kUnitTolerance) || !(n.z > 0.0)) {
      throw InvariantError("NormalMap: pixel (" + std::to_string(i % vectors_.width()) + "," +
                           std::to_string(i / vectors_.width()) +
                           ") is not a unit vector with positive z");
    }
  }
}

NormalMap NormalMap::normalized(Grid<Vec3> vectors) {
  std::vector<std::pair<std::size_t, std::size_t>> bad;
  std::size_t bad_count = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    Vec3& n = vectors[i];
    const double len = n.norm();
    if (!(len > 0.0) || !std::isfinite(len) || !(n.z > 0.0)) {
      if (bad.size() < kMaxReportedPixels) bad.emplace_back(i % vectors.width(), i / vectors.width());
      ++bad_count;
      continue;
    }
    n = {n.x / len, n.y / len, n.z / len};
  }
  if (bad_count) {
    throw DegeneratePixelError(
        std::to_string(bad_count) + " pixel(s) are zero-length or face away from the viewer", bad);
  }
  return NormalMap(std::move(vectors));
}

EncodedNormalMap::EncodedNormalMap(Grid<Vec3> channels) : channels_(std::move(channels)) {
  require_min_size(channels_.width(), channels_.height(), "EncodedNormalMap");
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    const Vec3& c = channels_[i];
    for (double v : {c.x, c.y, c.z}) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw InvariantError("EncodedNormalMap: channel outside [0,1] at (" +
                             std::to_string(i % channels_.width()) + "," +
                             std::to_string(i / channels_.width()) + ")");
      }
    }
  }
}

GradientField::GradientField(Grid<Vec2> vectors) : vectors_(std::move(vectors)) {
  require_min_size(vectors_.width(), vectors_.height(), "GradientField");
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    if (!std::isfinite(vectors_[i].x) || !std::isfinite(vectors_[i].y)) {
      throw InvariantError("GradientField: non-finite component at (" +
                           std::to_string(i % vectors_.width()) + "," +
                           std::to_string(i / vectors_.width()) + ")");
    }
  }
}

EncodedNormalMap encode_normals(const NormalMap& normals) {
  Grid<Vec3> out(normals.width(), normals.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& n = normals[i];
    out[i] = {std::clamp((n.x + 1.0) * 0.5, 0.0, 1.0), std::clamp((n.y + 1.0) * 0.5, 0.0, 1.0),
              std::clamp((n.z + 1.0) * 0.5, 0.0, 1.0)};
  }
  return EncodedNormalMap(std::move(out));
}

NormalMap decode_normals(const EncodedNormalMap& encoded) {
  Grid<Vec3> out(encoded.width(), encoded.height());
  std::vector<std::pair<std::size_t, std::size_t>> bad;
  std::size_t bad_count = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& c = encoded[i];
    Vec3 v{2.0 * c.x - 1.0, 2.0 * c.y - 1.0, 2.0 * c.z - 1.0};
    // The zero check precedes the z clamp, otherwise the clamp would turn a
    // null pixel into a spurious (0,0,1).
    if (v.squared_norm() < 1e-24) {
      if (bad.size() < kMaxReportedPixels) bad.emplace_back(i % out.width(), i / out.width());
      ++bad_count;
      continue;
    }
    v.z = std::max(v.z, kDecodeZFloor);
    const double len = v.norm();
    out[i] = {v.x / len, v.y / len, v.z / len};
  }
  if (bad_count) {
    throw DegeneratePixelError(std::to_string(bad_count) + " pixel(s) decode to a zero vector",
                               bad);
  }
  return NormalMap(std::move(out));
}

}  // namespace relief
