#include <algorithm>

#include "relief/differential.hpp"
#include "relief/io.hpp"
#include "relief/synthetic.hpp"

namespace relief::synthetic {

namespace fs = std::filesystem;

DepthMap box_blur(const DepthMap& depth, std::size_t radius) {
  const std::size_t w = depth.width();
  const std::size_t h = depth.height();
  auto pass = [&](const Grid<double>& in, bool horizontal) {
    Grid<double> out(w, h);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = horizontal ? x : y;
        const std::size_t n = horizontal ? w : h;
        const std::size_t lo = i >= radius ? i - radius : 0;
        const std::size_t hi = std::min(n - 1, i + radius);
        double s = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) s += horizontal ? in(k, y) : in(x, k);
        out(x, y) = s / static_cast<double>(hi - lo + 1);
      }
    }
    return out;
  };
  return DepthMap(pass(pass(depth.values(), true), false), depth.mask());
}

namespace {

DepthMap divided(const DepthMap& depth, double factor) {
  Grid<double> v = depth.values();
  for (double& x : v.data()) x /= factor;
  return DepthMap(std::move(v));
}

}  // namespace

FixtureCorpus write_fixture_corpus(const fs::path& dir, std::size_t size) {
  FixtureCorpus c{dir / "truth.pfm",       dir / "rel_depth.pfm", dir / "detail_normal.pfm",
                  dir / "rough_depth.pfm", dir / "gt",            dir / "pred"};
  fs::create_directories(c.gt_dir);
  fs::create_directories(c.pred_dir);
  const std::size_t blur = std::max<std::size_t>(1, size / 64);

  const DepthMap truth = relief_scene(size, size, 120.0);
  const DepthMap rough = box_blur(truth, blur);
  save_depth(truth, c.truth, DepthFormat::pfm);
  save_depth(rough, c.rough_depth, DepthFormat::pfm);
  save_depth(divided(rough, 37.0), c.rel_depth, DepthFormat::pfm);
  save_normals(depth_to_normal(truth, DiffScheme::forward), c.detail_normal);

  const DepthMap shallow = relief_scene(size, size, 50.0);
  const DepthMap deep = relief_scene(size, size, 150.0);
  save_depth(shallow, c.gt_dir / "relief_a.pfm", DepthFormat::pfm);
  save_depth(deep, c.gt_dir / "relief_b.pfm", DepthFormat::pfm);
  save_depth(box_blur(shallow, blur), c.pred_dir / "relief_a.pfm", DepthFormat::pfm);
  save_depth(box_blur(deep, blur), c.pred_dir / "relief_b.pfm", DepthFormat::pfm);
  return c;
}

}  // namespace relief::synthetic
