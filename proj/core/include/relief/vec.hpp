#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace relief {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double squared_norm() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(squared_norm()); }

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

/// Cosine of the angle between two non-zero vectors, clamped to [-1, 1].
/// Identical inputs give exactly 1: sqrt(s * s) == s in IEEE arithmetic.
inline double cosine_between(const Vec3& a, const Vec3& b) {
  const double c = dot(a, b) / std::sqrt(a.squared_norm() * b.squared_norm());
  return std::clamp(c, -1.0, 1.0);
}

inline double angle_between_deg(const Vec3& a, const Vec3& b) {
  return std::acos(cosine_between(a, b)) * (180.0 / std::numbers::pi);
}

}  // namespace relief
