#pragma once

#include <cstddef>

#include "relief/maps.hpp"

// Analytic height fields for tests, benchmarks and demo fixtures.
namespace relief::synthetic {

/// amplitude * exp(-r^2 / (2 sigma^2)) centred in the grid.
DepthMap gaussian_bump(std::size_t width, std::size_t height, double amplitude, double sigma);

/// a * x + b * y + c.
DepthMap plane(std::size_t width, std::size_t height, double a, double b, double c = 0.0);

/// Spherical cap sqrt(R^2 - r^2) (clamped to 0 outside the disc) centred
/// in the grid.
DepthMap hemisphere(std::size_t width, std::size_t height, double radius);
/// Exact normals of `hemisphere`; (0,0,1) outside the disc.
NormalMap hemisphere_normals(std::size_t width, std::size_t height, double radius);

/// Left half at `low`, right half at `high`; the step sits between columns
/// width/2 - 1 and width/2.
DepthMap two_plateaus(std::size_t width, std::size_t height, double low, double high);

/// A relief-like test scene: several smooth bumps on a base, a raised slab
/// with steep soft walls, and fine ripples, spanning [0, thickness].
DepthMap relief_scene(std::size_t width, std::size_t height, double thickness);

}  // namespace relief::synthetic

#include <filesystem>

namespace relief::synthetic {

/// Separable box blur with the given radius over all pixels.
DepthMap box_blur(const DepthMap& depth, std::size_t radius);

/// Paths of a generated fixture corpus.
struct FixtureCorpus {
  std::filesystem::path truth;          // relief_scene, metric depth
  std::filesystem::path rel_depth;      // blurred truth divided by an unknown factor
  std::filesystem::path detail_normal;  // forward-difference normals of truth
  std::filesystem::path rough_depth;    // blurred truth, metric
  std::filesystem::path gt_dir;         // two reliefs of thickness ~50 and ~150
  std::filesystem::path pred_dir;       // blurred versions of gt_dir
};

/// Writes a deterministic corpus of `size` x `size` PFM files under `dir`.
FixtureCorpus write_fixture_corpus(const std::filesystem::path& dir, std::size_t size);

}  // namespace relief::synthetic
