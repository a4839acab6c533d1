#include "relief/synthetic.hpp"

#include <cmath>

namespace relief::synthetic {

namespace {

template <typename F>
DepthMap tabulate(std::size_t width, std::size_t height, F f) {
  Grid<double> g(width, height);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) g(x, y) = f(static_cast<double>(x), static_cast<double>(y));
  return DepthMap(std::move(g));
}

}  // namespace

DepthMap gaussian_bump(std::size_t width, std::size_t height, double amplitude, double sigma) {
  const double cx = 0.5 * static_cast<double>(width - 1);
  const double cy = 0.5 * static_cast<double>(height - 1);
  return tabulate(width, height, [&](double x, double y) {
    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    return amplitude * std::exp(-r2 / (2.0 * sigma * sigma));
  });
}

DepthMap plane(std::size_t width, std::size_t height, double a, double b, double c) {
  return tabulate(width, height, [&](double x, double y) { return a * x + b * y + c; });
}

DepthMap hemisphere(std::size_t width, std::size_t height, double radius) {
  const double cx = 0.5 * static_cast<double>(width - 1);
  const double cy = 0.5 * static_cast<double>(height - 1);
  return tabulate(width, height, [&](double x, double y) {
    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    return r2 < radius * radius ? std::sqrt(radius * radius - r2) : 0.0;
  });
}

NormalMap hemisphere_normals(std::size_t width, std::size_t height, double radius) {
  const double cx = 0.5 * static_cast<double>(width - 1);
  const double cy = 0.5 * static_cast<double>(height - 1);
  Grid<Vec3> g(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double r2 = dx * dx + dy * dy;
      if (r2 < radius * radius) {
        // Outward sphere normal; z > 0 inside the disc.
        g(x, y) = {dx / radius, dy / radius, std::sqrt(radius * radius - r2) / radius};
        if (g(x, y).z <= 0.0) g(x, y) = {0.0, 0.0, 1.0};
      } else {
        g(x, y) = {0.0, 0.0, 1.0};
      }
    }
  }
  return NormalMap::normalized(std::move(g));
}

DepthMap two_plateaus(std::size_t width, std::size_t height, double low, double high) {
  const double split = static_cast<double>(width / 2);
  return tabulate(width, height, [&](double x, double) { return x < split ? low : high; });
}

DepthMap relief_scene(std::size_t width, std::size_t height, double thickness) {
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  struct Bump {
    double cx, cy, sigma, amp;
  };
  const Bump bumps[] = {{0.30, 0.35, 0.10, 0.45}, {0.65, 0.30, 0.07, 0.30},
                        {0.55, 0.70, 0.12, 0.35}, {0.25, 0.75, 0.05, 0.20}};
  const DepthMap raw = tabulate(width, height, [&](double x, double y) {
    const double u = x / (w - 1.0);
    const double v = y / (h - 1.0);
    double z = 0.0;
    for (const Bump& b : bumps) {
      const double r2 = (u - b.cx) * (u - b.cx) + (v - b.cy) * (v - b.cy);
      z += b.amp * std::exp(-r2 / (2.0 * b.sigma * b.sigma));
    }
    // Slab with logistic walls: steep but smooth occlusion-like edges.
    const double wall = 0.004;
    const double sx = 1.0 / (1.0 + std::exp(-(u - 0.72) / wall)) -
                      1.0 / (1.0 + std::exp(-(u - 0.92) / wall));
    const double sy = 1.0 / (1.0 + std::exp(-(v - 0.45) / wall)) -
                      1.0 / (1.0 + std::exp(-(v - 0.90) / wall));
    z += 0.25 * sx * sy;
    z += 0.015 * std::sin(40.0 * u) * std::cos(34.0 * v);
    return z;
  });
  const double lo = raw.min_value();
  const double span = raw.thickness();
  Grid<double> values = raw.values();
  for (double& z : values.data()) z = (z - lo) / span * thickness;
  return DepthMap(std::move(values));
}

}  // namespace relief::synthetic
