#include "relief/differential.hpp"

#include <algorithm>
#include <cmath>

namespace relief {

namespace {

// Slope along one axis at index i of a line of n samples. `value(k)` and
// `ok(k)` read the k-th sample on the line.
template <typename Value, typename Ok>
double line_slope(std::size_t i, std::size_t n, DiffScheme scheme, Value value, Ok ok) {
  const bool has_prev = i > 0 && ok(i - 1);
  const bool has_next = i + 1 < n && ok(i + 1);
  if (scheme == DiffScheme::central) {
    if (has_prev && has_next) return (value(i + 1) - value(i - 1)) * 0.5;
    if (has_next) return value(i + 1) - value(i);
    if (has_prev) return value(i) - value(i - 1);
    return 0.0;
  }
  if (has_next) return value(i + 1) - value(i);
  // Last sample repeats the previous forward difference.
  if (has_prev) return value(i) - value(i - 1);
  return 0.0;
}

}  // namespace

GradientField depth_to_gradient(const DepthMap& depth, DiffScheme scheme) {
  const std::size_t w = depth.width();
  const std::size_t h = depth.height();
  Grid<Vec2> out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!depth.valid(x, y)) continue;
      const double p = line_slope(
          x, w, scheme, [&](std::size_t k) { return depth(k, y); },
          [&](std::size_t k) { return depth.valid(k, y); });
      const double q = line_slope(
          y, h, scheme, [&](std::size_t k) { return depth(x, k); },
          [&](std::size_t k) { return depth.valid(x, k); });
      out(x, y) = {p, q};
    }
  }
  return GradientField(std::move(out));
}

NormalMap gradient_to_normal(const GradientField& gradients) {
  Grid<Vec3> out(gradients.width(), gradients.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec2& g = gradients[i];
    const double inv = 1.0 / std::sqrt(g.x * g.x + g.y * g.y + 1.0);
    out[i] = {-g.x * inv, -g.y * inv, inv};
  }
  return NormalMap(std::move(out));
}

SlopeConversion normal_to_gradient(const NormalMap& normals, double z_floor) {
  Grid<Vec2> out(normals.width(), normals.height());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& n = normals[i];
    double nz = n.z;
    if (nz < z_floor) {
      nz = z_floor;
      ++hits;
    }
    out[i] = {-n.x / nz, -n.y / nz};
  }
  return {GradientField(std::move(out)), hits};
}

NormalMap depth_to_normal(const DepthMap& depth, DiffScheme scheme) {
  return gradient_to_normal(depth_to_gradient(depth, scheme));
}

}  // namespace relief
