#include "relief/integration.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "relief/differential.hpp"
#include "relief/error.hpp"

namespace relief {

void SolverConfig::validate() const {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("integration.mu must be >= 0");
  if (!(cg_tolerance > 0.0 && cg_tolerance < 1.0))
    throw ConfigError("integration.cg_tolerance must lie in (0, 1)");
  if (outer_iters < 1) throw ConfigError("integration.outer_iters must be >= 1");
  if (!(edge_sigma > 0.0) || !std::isfinite(edge_sigma))
    throw ConfigError("integration.edge_sigma must be > 0");
}

std::size_t SolverConfig::resolved_max_iters(std::size_t unknowns) const {
  if (max_cg_iters > 0) return max_cg_iters;
  return static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(static_cast<double>(unknowns))));
}

EdgeWeights EdgeWeights::uniform(std::size_t width, std::size_t height, double value) {
  return {Grid<double>(width, height, value), Grid<double>(width, height, value)};
}

namespace {

/// Matrix-free operator A = D^T W D + mu * I restricted to valid pixels.
/// Invalid pixels carry an identity row so they decouple from the rest.
class ScreenedOperator {
 public:
  ScreenedOperator(const DepthMap& d, const EdgeWeights& weights, double mu)
      : w_(d.width()), h_(d.height()), mu_(mu), valid_(d.size()), wh_(d.size(), 0.0),
        wv_(d.size(), 0.0), diag_(d.size(), 0.0) {
    for (std::size_t i = 0; i < valid_.size(); ++i) valid_[i] = d.valid(i);
    for (std::size_t y = 0; y < h_; ++y) {
      for (std::size_t x = 0; x < w_; ++x) {
        const std::size_t i = y * w_ + x;
        if (!valid_[i]) continue;
        if (x + 1 < w_ && valid_[i + 1]) wh_[i] = weights.horizontal(x, y);
        if (y + 1 < h_ && valid_[i + w_]) wv_[i] = weights.vertical(x, y);
      }
    }
    for (std::size_t i = 0; i < diag_.size(); ++i) {
      if (!valid_[i]) {
        diag_[i] = 1.0;
        continue;
      }
      diag_[i] += mu_;
      diag_[i] += wh_[i] + wv_[i];
      if (i % w_ > 0) diag_[i] += wh_[i - 1];
      if (i >= w_) diag_[i] += wv_[i - w_];
    }
  }

  std::size_t size() const { return valid_.size(); }
  bool valid(std::size_t i) const { return valid_[i] != 0; }
  double diag(std::size_t i) const { return diag_[i]; }
  double wh(std::size_t i) const { return wh_[i]; }
  double wv(std::size_t i) const { return wv_[i]; }
  std::size_t width() const { return w_; }
  std::size_t height() const { return h_; }

  void apply(const std::vector<double>& z, std::vector<double>& out) const {
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = diag_[i] * z[i];
    for (std::size_t y = 0; y < h_; ++y) {
      for (std::size_t x = 0; x < w_; ++x) {
        const std::size_t i = y * w_ + x;
        if (const double a = wh_[i]; a != 0.0) {
          out[i] -= a * z[i + 1];
          out[i + 1] -= a * z[i];
        }
        if (const double a = wv_[i]; a != 0.0) {
          out[i] -= a * z[i + w_];
          out[i + w_] -= a * z[i];
        }
      }
    }
  }

  /// b = D^T W g + mu * d; identity rows get 0.
  std::vector<double> rhs(const GradientField& g, const DepthMap& d) const {
    std::vector<double> b(size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (valid_[i]) b[i] = mu_ * d.values()[i];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (const double a = wh_[i]; a != 0.0) {
        b[i + 1] += a * g[i].x;
        b[i] -= a * g[i].x;
      }
      if (const double a = wv_[i]; a != 0.0) {
        b[i + w_] += a * g[i].y;
        b[i] -= a * g[i].y;
      }
    }
    return b;
  }

  /// Connected regions of valid pixels joined by nonzero-weight edges.
  std::vector<std::size_t> components(std::size_t& count) const {
    std::vector<std::size_t> parent(size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
      while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
      }
      return i;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
      a = find(a);
      b = find(b);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };
    for (std::size_t i = 0; i < size(); ++i) {
      if (wh_[i] > 0.0) unite(i, i + 1);
      if (wv_[i] > 0.0) unite(i, i + w_);
    }
    std::vector<std::size_t> label(size(), 0);
    std::vector<std::size_t> remap(size(), SIZE_MAX);
    count = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      const std::size_t r = find(i);
      if (remap[r] == SIZE_MAX) remap[r] = count++;
      label[i] = remap[r];
    }
    return label;
  }

 private:
  std::size_t w_;
  std::size_t h_;
  double mu_;
  std::vector<std::uint8_t> valid_;
  std::vector<double> wh_;
  std::vector<double> wv_;
  std::vector<double> diag_;
};

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct CgOutcome {
  std::size_t iterations = 0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients, starting from z.
CgOutcome pcg(const ScreenedOperator& op, const std::vector<double>& b, std::vector<double>& z,
              double tolerance, std::size_t max_iters) {
  const std::size_t n = op.size();
  std::vector<double> r(n), zr(n), p(n), ap(n);
  op.apply(z, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double threshold = tolerance * norm2(b);

  auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) zr[i] = op.diag(i) > 0.0 ? r[i] / op.diag(i) : r[i];
  };

  CgOutcome out;
  if (norm2(r) <= threshold) {
    out.converged = true;
    return out;
  }
  precondition();
  p = zr;
  double rz = std::inner_product(r.begin(), r.end(), zr.begin(), 0.0);
  while (out.iterations < max_iters) {
    op.apply(p, ap);
    const double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    ++out.iterations;
    if (norm2(r) <= threshold) {
      out.converged = true;
      break;
    }
    precondition();
    const double rz_next = std::inner_product(r.begin(), r.end(), zr.begin(), 0.0);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = zr[i] + beta * p[i];
  }
  return out;
}

void check_inputs(const GradientField& g, const DepthMap& d, const EdgeWeights& weights) {
  require_same_shape(g, d, "screened_poisson");
  require_same_shape(weights.horizontal, d, "screened_poisson weights");
  require_same_shape(weights.vertical, d, "screened_poisson weights");
  for (double w : weights.horizontal.data())
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvariantError("edge weights must be finite and >= 0");
  for (double w : weights.vertical.data())
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvariantError("edge weights must be finite and >= 0");
}

}  // namespace

double screened_energy(const DepthMap& z, const GradientField& g, const DepthMap& d, double mu,
                       const EdgeWeights* weights) {
  require_same_shape(z, g, "screened_energy");
  require_same_shape(z, d, "screened_energy");
  const std::size_t w = z.width();
  const std::size_t h = z.height();
  double energy = 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!d.valid(x, y)) continue;
      const double zi = z(x, y);
      energy += mu * (zi - d(x, y)) * (zi - d(x, y));
      if (x + 1 < w && d.valid(x + 1, y)) {
        const double we = weights ? weights->horizontal(x, y) : 1.0;
        const double r = z(x + 1, y) - zi - g(x, y).x;
        energy += we * r * r;
      }
      if (y + 1 < h && d.valid(x, y + 1)) {
        const double we = weights ? weights->vertical(x, y) : 1.0;
        const double r = z(x, y + 1) - zi - g(x, y).y;
        energy += we * r * r;
      }
    }
  }
  return energy;
}

SolveResult solve_weighted(const GradientField& g, const DepthMap& d, const EdgeWeights& weights,
                           const SolverConfig& cfg) {
  cfg.validate();
  check_inputs(g, d, weights);

  const ScreenedOperator op(d, weights, cfg.mu);
  const std::vector<double> b = op.rhs(g, d);
  const double b_norm = norm2(b);

  std::vector<double> z(op.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = op.valid(i) ? d.values()[i] : 0.0;

  CgOutcome cg;
  if (b_norm == 0.0) {
    std::fill(z.begin(), z.end(), 0.0);
    cg.converged = true;
  } else {
    cg = pcg(op, b, z, cfg.cg_tolerance, cfg.resolved_max_iters(d.valid_count()));
  }

  if (cfg.mu == 0.0) {
    // The system only fixes z up to a constant per connected region.
    std::size_t count = 0;
    const std::vector<std::size_t> label = op.components(count);
    std::vector<double> shift(count, 0.0);
    std::vector<std::size_t> members(count, 0);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!op.valid(i)) continue;
      shift[label[i]] += d.values()[i] - z[i];
      ++members[label[i]];
    }
    for (std::size_t i = 0; i < z.size(); ++i)
      if (op.valid(i)) z[i] += shift[label[i]] / static_cast<double>(members[label[i]]);
  }

  Grid<double> values(d.width(), d.height());
  for (std::size_t i = 0; i < z.size(); ++i) values[i] = op.valid(i) ? z[i] : d.values()[i];

  std::vector<double> az(op.size());
  op.apply(z, az);
  double r2 = 0.0;
  for (std::size_t i = 0; i < az.size(); ++i) r2 += (b[i] - az[i]) * (b[i] - az[i]);

  SolveResult result{DepthMap(std::move(values), d.mask()), {}};
  result.report.cg_iterations_used = cg.iterations;
  result.report.final_relative_residual = b_norm > 0.0 ? std::sqrt(r2) / b_norm : std::sqrt(r2);
  result.report.converged = result.report.final_relative_residual <= cfg.cg_tolerance || cg.converged;
  result.report.energy = screened_energy(result.depth, g, d, cfg.mu, &weights);
  return result;
}

SolveResult screened_poisson(const GradientField& g, const DepthMap& d, const SolverConfig& cfg) {
  return solve_weighted(g, d, EdgeWeights::uniform(d.width(), d.height()), cfg);
}

EdgeWeights residual_edge_weights(const DepthMap& z, const GradientField& g, double edge_sigma) {
  require_same_shape(z, g, "residual_edge_weights");
  const std::size_t w = z.width();
  const std::size_t h = z.height();
  EdgeWeights out = EdgeWeights::uniform(w, h, 0.0);
  auto weight = [&](double r) {
    const double t = r / edge_sigma;
    return std::exp(-t * t);
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!z.valid(x, y)) continue;
      if (x + 1 < w && z.valid(x + 1, y))
        out.horizontal(x, y) = weight(std::abs(z(x + 1, y) - z(x, y) - g(x, y).x));
      if (y + 1 < h && z.valid(x, y + 1))
        out.vertical(x, y) = weight(std::abs(z(x, y + 1) - z(x, y) - g(x, y).y));
    }
  }
  return out;
}

SolveResult integrate_gradients(const GradientField& g, const DepthMap& d_init,
                                const SolverConfig& cfg, const RoundObserver& observer) {
  cfg.validate();
  SolveResult current = screened_poisson(g, d_init, cfg);
  if (observer) observer(1, current);
  for (std::size_t round = 2; round <= cfg.outer_iters; ++round) {
    const EdgeWeights weights = residual_edge_weights(current.depth, g, cfg.edge_sigma);
    current = solve_weighted(g, d_init, weights, cfg);
    if (observer) observer(round, current);
  }
  return current;
}

SolveResult integrate_normals(const NormalMap& normals, const DepthMap& d_init,
                              const SolverConfig& cfg, const RoundObserver& observer) {
  require_same_shape(normals, d_init, "integrate_normals");
  const SlopeConversion slopes = normal_to_gradient(normals);
  SolveResult result = integrate_gradients(slopes.gradients, d_init, cfg, observer);
  result.report.slope_floor_hits = slopes.floor_hits;
  return result;
}

SolveResult refine_depth_label(const DepthMap& rough, const NormalMap& detail_normal, double mu) {
  SolverConfig cfg;
  cfg.mu = mu;
  return refine_depth_label(rough, detail_normal, cfg);
}

SolveResult refine_depth_label(const DepthMap& rough, const NormalMap& detail_normal,
                               const SolverConfig& cfg) {
  require_same_shape(rough, detail_normal, "refine_depth_label");
  const SlopeConversion slopes = normal_to_gradient(detail_normal);
  SolveResult result = screened_poisson(slopes.gradients, rough, cfg);
  result.report.slope_floor_hits = slopes.floor_hits;
  return result;
}

}  // namespace relief
