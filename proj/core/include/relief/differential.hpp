#pragma once

#include <cstddef>

#include "relief/maps.hpp"

namespace relief {

/// central: (z[x+1] - z[x-1]) / 2 inside, one-sided differences at borders.
/// forward: z[x+1] - z[x], last column/row repeating its neighbour. This is
/// the discretization used by the integrator.
enum class DiffScheme { central, forward };

/// Differences never read masked pixels: a missing neighbour falls back to
/// the one-sided difference, and a pixel with no valid neighbour along an
/// axis gets slope 0 on that axis.
GradientField depth_to_gradient(const DepthMap& depth, DiffScheme scheme = DiffScheme::central);

/// n = (-p, -q, 1) / sqrt(p^2 + q^2 + 1).
NormalMap gradient_to_normal(const GradientField& gradients);

struct SlopeConversion {
  GradientField gradients;
  /// Pixels whose n.z fell below the floor and were clamped.
  std::size_t floor_hits = 0;
};

inline constexpr double kDefaultSlopeFloor = 1e-3;

/// p = -n.x / max(n.z, z_floor), q = -n.y / max(n.z, z_floor).
SlopeConversion normal_to_gradient(const NormalMap& normals, double z_floor = kDefaultSlopeFloor);

NormalMap depth_to_normal(const DepthMap& depth, DiffScheme scheme = DiffScheme::central);

}  // namespace relief
