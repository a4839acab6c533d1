#pragma once

#include <cstddef>

#include "relief/differential.hpp"
#include "relief/maps.hpp"

namespace relief {

/// Multiplier bracket for the global scale search.
struct ScaleRange {
  double min = 0.01;
  double max = 100.0;
};

struct ScaleSearchResult {
  double scale = 1.0;
  /// Mean angular error in degrees at `scale`.
  double objective = 0.0;
  std::size_t evaluations = 0;
  /// The relative depth is constant, so every scale scores the same and
  /// `scale` is the lower bracket end.
  bool degenerate = false;
};

/// Finds the multiplier s for which the normals of s * rel_depth best match
/// `target` (mean angular error over valid pixels). Golden-section search in
/// log(s) to a relative tolerance of 1e-3 on s. The returned point is the
/// best evaluated one, so it never scores worse than either bracket end.
ScaleSearchResult global_scale(const DepthMap& rel_depth, const NormalMap& target,
                               ScaleRange range = {});

/// Mean angular error (degrees) between normals of scale * rel_depth and
/// target; the objective minimized by global_scale.
double scale_objective(const DepthMap& rel_depth, const NormalMap& target, double scale);

struct NormalTransformParams {
  /// Slope magnitude (px/px) where attenuation kicks in.
  double tau = 4.0;
  /// Sharpness of the knee; k >= 1.
  double k = 2.0;
};

/// Attenuated slope magnitude: m / (1 + (m/tau)^k)^(1/k). Monotone, never
/// above m or tau, and ~m for m << tau.
double attenuate_slope(double m, const NormalTransformParams& params);

/// Compresses steep slopes (occlusion walls) while leaving gentle detail
/// almost untouched. Gradient directions are preserved exactly.
NormalMap transform_normals(const NormalMap& normals, const NormalTransformParams& params);

/// Per-channel soft blend of a detail layer into a base layer:
///   detail <= 0.5: base - (1 - 2 detail) * base * (1 - base)
///   detail >  0.5: base + (2 detail - 1) * (sqrt(base) - base)
double soft_fuse_channel(double base, double detail);
EncodedNormalMap soft_fuse(const EncodedNormalMap& base, const EncodedNormalMap& detail);

struct FusionConfig {
  NormalTransformParams transform;
  ScaleRange scale_range;
};

struct FusionResult {
  NormalMap fused;
  DepthMap scaled_depth;
  /// Transformed normals of the scaled depth (the blend base).
  NormalMap base_normals;
  ScaleSearchResult scale;
};

/// Scale the relative depth against the detail normals, take its normals,
/// transform them, blend the detail normals in, renormalize.
FusionResult fuse_pipeline(const DepthMap& rel_depth, const NormalMap& detail_normal,
                           const FusionConfig& cfg = {});

}  // namespace relief
