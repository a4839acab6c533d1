#include "relief/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "relief/error.hpp"

namespace relief {

namespace {

constexpr double kScaleRelTolerance = 1e-3;

DepthMap scaled(const DepthMap& depth, double s) {
  Grid<double> values = depth.values();
  for (std::size_t i = 0; i < values.size(); ++i)
    if (depth.valid(i)) values[i] *= s;
  return DepthMap(std::move(values), depth.mask());
}

}  // namespace

double scale_objective(const DepthMap& rel_depth, const NormalMap& target, double scale) {
  const NormalMap normals = depth_to_normal(scaled(rel_depth, scale));
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < rel_depth.size(); ++i) {
    if (!rel_depth.valid(i)) continue;
    sum += angle_between_deg(normals[i], target[i]);
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

ScaleSearchResult global_scale(const DepthMap& rel_depth, const NormalMap& target,
                               ScaleRange range) {
  require_same_shape(rel_depth, target, "global_scale");
  if (!(range.min > 0.0) || !(range.max >= range.min))
    throw ConfigError("global_scale: scale range must satisfy 0 < min <= max, got [" +
                      std::to_string(range.min) + ", " + std::to_string(range.max) + "]");

  ScaleSearchResult best;
  auto evaluate = [&](double log_s) {
    const double s = std::exp(log_s);
    const double f = scale_objective(rel_depth, target, s);
    ++best.evaluations;
    if (best.evaluations == 1 || f < best.objective) {
      best.objective = f;
      best.scale = s;
    }
    return f;
  };

  if (!(rel_depth.thickness() > 0.0)) {
    best.objective = scale_objective(rel_depth, target, range.min);
    best.scale = range.min;
    best.evaluations = 1;
    best.degenerate = true;
    return best;
  }

  double a = std::log(range.min);
  double b = std::log(range.max);
  evaluate(a);
  evaluate(b);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double tol = std::log1p(kScaleRelTolerance);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = evaluate(c);
  double fd = evaluate(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = evaluate(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = evaluate(d);
    }
  }
  // Pin the best point inside the final bracket; endpoint results already
  // compete through `evaluate`.
  evaluate(0.5 * (a + b));
  best.scale = std::clamp(best.scale, range.min, range.max);
  return best;
}

double attenuate_slope(double m, const NormalTransformParams& params) {
  if (!(m > 0.0)) return 0.0;
  const double r = std::pow(m / params.tau, params.k);
  return m / std::pow(1.0 + r, 1.0 / params.k);
}

NormalMap transform_normals(const NormalMap& normals, const NormalTransformParams& params) {
  if (!(params.tau > 0.0) || !(params.k >= 1.0))
    throw ConfigError("transform_normals: need tau > 0 and k >= 1");
  const SlopeConversion slopes = normal_to_gradient(normals);
  Grid<Vec2> out = slopes.gradients.vectors();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = std::hypot(out[i].x, out[i].y);
    if (!(m > 0.0)) continue;
    const double ratio = attenuate_slope(m, params) / m;
    out[i] = {out[i].x * ratio, out[i].y * ratio};
  }
  return gradient_to_normal(GradientField(std::move(out)));
}

double soft_fuse_channel(double base, double detail) {
  if (detail <= 0.5) return base - (1.0 - 2.0 * detail) * base * (1.0 - base);
  return base + (2.0 * detail - 1.0) * (std::sqrt(base) - base);
}

EncodedNormalMap soft_fuse(const EncodedNormalMap& base, const EncodedNormalMap& detail) {
  require_same_shape(base, detail, "soft_fuse");
  Grid<Vec3> out(base.width(), base.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& b = base[i];
    const Vec3& d = detail[i];
    out[i] = {soft_fuse_channel(b.x, d.x), soft_fuse_channel(b.y, d.y),
              soft_fuse_channel(b.z, d.z)};
  }
  return EncodedNormalMap(std::move(out));
}

FusionResult fuse_pipeline(const DepthMap& rel_depth, const NormalMap& detail_normal,
                           const FusionConfig& cfg) {
  require_same_shape(rel_depth, detail_normal, "fuse_pipeline");
  const ScaleSearchResult scale = global_scale(rel_depth, detail_normal, cfg.scale_range);
  DepthMap scaled_depth = scaled(rel_depth, scale.scale);
  NormalMap base = transform_normals(depth_to_normal(scaled_depth), cfg.transform);
  const EncodedNormalMap blended = soft_fuse(encode_normals(base), encode_normals(detail_normal));
  return {decode_normals(blended), std::move(scaled_depth), std::move(base), scale};
}

}  // namespace relief
