#pragma once

#include <cstddef>
#include <optional>

#include "relief/grid.hpp"
#include "relief/vec.hpp"

namespace relief {

/// Orthographic height field in pixel units. Immutable after construction.
///
/// Masked-out pixels may hold any value (including NaN); they are skipped by
/// every statistic, metric and solver residual. A missing mask means every
/// pixel is valid.
class DepthMap {
 public:
  /// Throws DimensionError for grids smaller than 2x2 or a mask of a
  /// different shape, InvariantError for non-finite valid samples.
  explicit DepthMap(Grid<double> values, std::optional<Mask> mask = std::nullopt);

  std::size_t width() const { return values_.width(); }
  std::size_t height() const { return values_.height(); }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t x, std::size_t y) const { return values_(x, y); }
  const Grid<double>& values() const { return values_; }

  const std::optional<Mask>& mask() const { return mask_; }
  bool has_mask() const { return mask_.has_value(); }
  bool valid(std::size_t x, std::size_t y) const { return !mask_ || (*mask_)(x, y) != 0; }
  bool valid(std::size_t i) const { return !mask_ || (*mask_)[i] != 0; }
  std::size_t valid_count() const;

  /// Extremes over valid pixels. Both are 0 when no pixel is valid.
  double min_value() const;
  double max_value() const;
  double thickness() const { return max_value() - min_value(); }

 private:
  Grid<double> values_;
  std::optional<Mask> mask_;
};

/// Unit normals with a viewer-facing (positive) z component.
class NormalMap {
 public:
  /// Validates |n| within 1e-6 of 1 and n.z > 0 at every pixel.
  explicit NormalMap(Grid<Vec3> vectors);

  /// Normalizes every vector first. Zero-length or non-positive-z vectors
  /// raise DegeneratePixelError listing their coordinates.
  static NormalMap normalized(Grid<Vec3> vectors);

  std::size_t width() const { return vectors_.width(); }
  std::size_t height() const { return vectors_.height(); }
  const Vec3& operator()(std::size_t x, std::size_t y) const { return vectors_(x, y); }
  const Vec3& operator[](std::size_t i) const { return vectors_[i]; }
  const Grid<Vec3>& vectors() const { return vectors_; }

 private:
  Grid<Vec3> vectors_;
};

/// Normals mapped channelwise onto [0,1] via c = (v + 1) / 2.
class EncodedNormalMap {
 public:
  explicit EncodedNormalMap(Grid<Vec3> channels);

  std::size_t width() const { return channels_.width(); }
  std::size_t height() const { return channels_.height(); }
  const Vec3& operator()(std::size_t x, std::size_t y) const { return channels_(x, y); }
  const Vec3& operator[](std::size_t i) const { return channels_[i]; }
  const Grid<Vec3>& channels() const { return channels_; }

 private:
  Grid<Vec3> channels_;
};

/// Per-pixel slopes: x = dz/dx (p), y = dz/dy (q), y pointing down the rows.
class GradientField {
 public:
  explicit GradientField(Grid<Vec2> vectors);

  std::size_t width() const { return vectors_.width(); }
  std::size_t height() const { return vectors_.height(); }
  const Vec2& operator()(std::size_t x, std::size_t y) const { return vectors_(x, y); }
  const Vec2& operator[](std::size_t i) const { return vectors_[i]; }
  const Grid<Vec2>& vectors() const { return vectors_; }

 private:
  Grid<Vec2> vectors_;
};

EncodedNormalMap encode_normals(const NormalMap& normals);

/// v = 2c - 1, then z is clamped to >= 1e-4 and the vector renormalized.
/// Pixels that decode to the zero vector raise DegeneratePixelError.
NormalMap decode_normals(const EncodedNormalMap& encoded);

/// Throws DimensionError unless both maps have the same width and height.
void require_same_shape(const auto& a, const auto& b, const char* what);

}  // namespace relief

#include "relief/detail/maps_inl.hpp"
