#pragma once

#include <cstddef>
#include <functional>

#include "relief/grid.hpp"
#include "relief/maps.hpp"

namespace relief {

inline constexpr double kDefaultMu = 0.02;

struct SolverConfig {
  /// Weight of the depth-fidelity term. 0 means pure integration, with the
  /// mean of each connected region pinned to the mean of d.
  double mu = kDefaultMu;
  /// 0 selects ceil(10 * sqrt(N)).
  std::size_t max_cg_iters = 0;
  /// Stop once |b - A z| <= cg_tolerance * |b|.
  double cg_tolerance = 1e-8;
  /// Reweighted passes of integrate_normals.
  std::size_t outer_iters = 3;
  /// Residual scale (px/px) of the edge weights exp(-(r / edge_sigma)^2).
  double edge_sigma = 1.0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  std::size_t resolved_max_iters(std::size_t unknowns) const;
};

struct SolveReport {
  /// |b - A z| / |b| of the normal equations at the returned z.
  double final_relative_residual = 0.0;
  std::size_t cg_iterations_used = 0;
  /// Discrete objective sum_e w_e (z_b - z_a - g_e)^2 + mu * sum_i (z_i - d_i)^2.
  double energy = 0.0;
  bool converged = false;
  /// Normals clamped by normal_to_gradient (integrate_normals only).
  std::size_t slope_floor_hits = 0;
};

struct SolveResult {
  DepthMap depth;
  SolveReport report;
};

/// Per-edge weights. horizontal(x, y) joins (x, y)-(x+1, y) and is unused in
/// the last column; vertical(x, y) joins (x, y)-(x, y+1) and is unused in the
/// last row.
struct EdgeWeights {
  Grid<double> horizontal;
  Grid<double> vertical;

  static EdgeWeights uniform(std::size_t width, std::size_t height, double value = 1.0);
};

/// Edge (x,y)->(x+1,y) targets g(x,y).x and edge (x,y)->(x,y+1) targets
/// g(x,y).y: forward differences with a homogeneous Neumann boundary.
/// Masked pixels of d are not unknowns; they keep d's value and every edge
/// touching them is dropped.
SolveResult screened_poisson(const GradientField& g, const DepthMap& d, const SolverConfig& cfg);

SolveResult solve_weighted(const GradientField& g, const DepthMap& d, const EdgeWeights& weights,
                           const SolverConfig& cfg);

double screened_energy(const DepthMap& z, const GradientField& g, const DepthMap& d, double mu,
                       const EdgeWeights* weights = nullptr);

/// Weights for the next pass given the current solution.
EdgeWeights residual_edge_weights(const DepthMap& z, const GradientField& g, double edge_sigma);

using RoundObserver = std::function<void(std::size_t round, const SolveResult&)>;

/// Iterative integration: round 1 uses uniform weights, each later round
/// down-weights edges that the previous solution could not satisfy, which
/// lets depth discontinuities open up. outer_iters = 1 is exactly
/// screened_poisson(normal_to_gradient(n), d_init, cfg).
SolveResult integrate_normals(const NormalMap& normals, const DepthMap& d_init,
                              const SolverConfig& cfg, const RoundObserver& observer = {});
SolveResult integrate_gradients(const GradientField& g, const DepthMap& d_init,
                                const SolverConfig& cfg, const RoundObserver& observer = {});

/// Single depth-constrained pass that pulls detail from `detail_normal`
/// into `rough`.
SolveResult refine_depth_label(const DepthMap& rough, const NormalMap& detail_normal,
                               double mu = kDefaultMu);
SolveResult refine_depth_label(const DepthMap& rough, const NormalMap& detail_normal,
                               const SolverConfig& cfg);

}  // namespace relief
