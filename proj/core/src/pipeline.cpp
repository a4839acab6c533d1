#include "relief/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "relief/differential.hpp"
#include "relief/error.hpp"
#include "relief/io.hpp"

namespace relief {

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = SIZE_MAX;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> threads;
  for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
  threads.clear();
  if (failure) std::rethrow_exception(failure);
}

OutputSet::~OutputSet() {
  if (committed_) return;
  for (const fs::path& p : paths_) {
    std::error_code ec;
    fs::remove(p, ec);
    fs::path tmp = p;
    tmp += ".tmp";
    fs::remove(tmp, ec);
  }
}

const fs::path& OutputSet::add(fs::path path) {
  paths_.push_back(std::move(path));
  return paths_.back();
}

void save_depth_tracked(OutputSet& outputs, const DepthMap& map, const fs::path& path,
                        DepthFormat format) {
  if (format == DepthFormat::png16) outputs.add(sidecar_path(path));
  save_depth(map, outputs.add(path), format);
}

namespace {

DepthMap with_mask(const DepthMap& depth, const std::optional<fs::path>& mask_path) {
  if (!mask_path) return depth;
  Mask mask = load_mask(*mask_path);
  require_same_shape(depth, mask, "mask");
  return DepthMap(depth.values(), std::move(mask));
}

void write_text_tracked(OutputSet& outputs, const fs::path& path, const std::string& text) {
  write_file_atomic(outputs.add(path),
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_viz(OutputSet& outputs, const DepthMap& depth, const fs::path& path) {
  const DepthVisualization viz = viz_depth(depth);
  Image8 img{depth.width(), depth.height(), 1,
             std::vector<std::uint8_t>(viz.pixels.data().begin(), viz.pixels.data().end())};
  save_png8(img, outputs.add(path));
}

const char* depth_extension(DepthFormat f) { return f == DepthFormat::pfm ? ".pfm" : ".png"; }

}  // namespace

PseudoLabelResult run_pseudo_label(const PseudoLabelRequest& request, const PipelineConfig& cfg) {
  cfg.validate();
  const DepthMap rel = with_mask(load_depth(request.rel_depth), request.mask);
  const NormalMap detail = load_normals(request.detail_normal);
  require_same_shape(rel, detail, "pseudo-label inputs");

  const FusionResult fused = fuse_pipeline(rel, detail, cfg.fusion);
  const SolveResult solved = integrate_normals(fused.fused, fused.scaled_depth, cfg.integration);

  fs::create_directories(request.out_dir);
  OutputSet outputs;
  PseudoLabelResult result;
  result.scale = fused.scale;
  result.solve = solved.report;
  result.thickness = solved.depth.thickness();
  result.fused_normal_path = request.out_dir / "fused_normal.pfm";
  result.depth_path =
      request.out_dir / (std::string("pseudo_label") + depth_extension(cfg.io.depth_format));
  result.manifest_path = request.out_dir / "manifest.json";

  save_normals(fused.fused, outputs.add(result.fused_normal_path));
  save_depth_tracked(outputs, solved.depth, result.depth_path, cfg.io.depth_format);
  if (cfg.io.write_viz) {
    write_viz(outputs, solved.depth, request.out_dir / "pseudo_label_viz.png");
    save_png8(viz_normals(fused.fused), outputs.add(request.out_dir / "fused_normal_viz.png"));
  }

  nlohmann::json inputs = {{"rel_depth", request.rel_depth.string()},
                           {"detail_normal", request.detail_normal.string()}};
  if (request.mask) inputs["mask"] = request.mask->string();
  const nlohmann::json manifest = {
      {"command", "pseudo-label"},
      {"inputs", inputs},
      {"outputs",
       {{"fused_normal", result.fused_normal_path.filename().string()},
        {"depth", result.depth_path.filename().string()}}},
      {"scale", fused.scale.scale},
      {"objective", fused.scale.objective},
      {"scale_evaluations", fused.scale.evaluations},
      {"scale_degenerate", fused.scale.degenerate},
      {"solver_residual", solved.report.final_relative_residual},
      {"cg_iterations", solved.report.cg_iterations_used},
      {"converged", solved.report.converged},
      {"energy", solved.report.energy},
      {"slope_floor_hits", solved.report.slope_floor_hits},
      {"thickness", result.thickness},
      {"config", nlohmann::json::parse(config_to_json(cfg))}};
  result.manifest_json = manifest.dump(2) + "\n";
  write_text_tracked(outputs, result.manifest_path, result.manifest_json);
  outputs.commit();
  return result;
}

RefineResult run_refine(const RefineRequest& request, const PipelineConfig& cfg) {
  cfg.validate();
  const DepthMap rough = with_mask(load_depth(request.rough_depth), request.mask);
  const NormalMap detail = load_normals(request.detail_normal);
  require_same_shape(rough, detail, "refine inputs");
  const SolveResult solved = refine_depth_label(rough, detail, cfg.integration);

  if (request.out.has_parent_path()) fs::create_directories(request.out.parent_path());
  OutputSet outputs;
  save_depth_tracked(outputs, solved.depth, request.out, depth_format_from_path(request.out));
  if (cfg.io.write_viz) {
    fs::path viz = request.out;
    viz.replace_extension();
    viz += "_viz.png";
    write_viz(outputs, solved.depth, viz);
  }
  outputs.commit();

  RefineResult result;
  result.solve = solved.report;
  result.thickness = solved.depth.thickness();
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < rough.size(); ++i) {
    if (!rough.valid(i)) continue;
    const double d = solved.depth.values()[i] - rough.values()[i];
    sq += d * d;
    ++n;
  }
  result.rms_change = n ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
  return result;
}

std::vector<std::pair<std::string, fs::path>> list_depth_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, fs::path> by_stem;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".pfm" && ext != ".png") continue;
    const std::string stem = p.stem().string();
    if (by_stem.count(stem))
      throw IoError("ambiguous depth files for '" + stem + "' in " + dir.string());
    by_stem[stem] = p;
  }
  return {by_stem.begin(), by_stem.end()};
}

Pairing pair_by_stem(const fs::path& pred_dir, const fs::path& gt_dir) {
  const auto pred = list_depth_files(pred_dir);
  const auto gt = list_depth_files(gt_dir);
  std::map<std::string, fs::path> gt_map(gt.begin(), gt.end());
  Pairing out;
  for (const auto& [stem, path] : pred) {
    auto it = gt_map.find(stem);
    if (it == gt_map.end()) {
      out.unmatched.push_back("pred:" + path.filename().string());
      continue;
    }
    out.pairs.push_back({stem, path, it->second});
    gt_map.erase(it);
  }
  for (const auto& [stem, path] : gt_map) out.unmatched.push_back("gt:" + path.filename().string());
  return out;
}

Pairing pairs_from_manifest(const fs::path& manifest) {
  const std::vector<std::uint8_t> bytes = read_file(manifest);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("pair manifest " + manifest.string() + ": " + e.what());
  }
  if (!j.is_array()) throw ConfigError("pair manifest must be a JSON array");
  const fs::path base = manifest.parent_path();
  Pairing out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("pred") || !item.contains("gt"))
      throw ConfigError("pair manifest entries need \"pred\" and \"gt\"");
    fs::path pred = item.at("pred").get<std::string>();
    fs::path gt = item.at("gt").get<std::string>();
    if (pred.is_relative()) pred = base / pred;
    if (gt.is_relative()) gt = base / gt;
    const std::string id = item.contains("id") ? item.at("id").get<std::string>() : pred.stem().string();
    out.pairs.push_back({id, pred, gt});
  }
  return out;
}

MethodReport evaluate_pairs(std::string name, const std::vector<DepthPair>& pairs,
                            const std::optional<fs::path>& mask_dir, unsigned jobs) {
  if (mask_dir && !fs::is_directory(*mask_dir))
    throw IoError("mask directory not found: " + mask_dir->string());
  MethodReport report;
  report.name = std::move(name);
  report.rows.resize(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const DepthPair& pair = pairs[i];
    const std::string where = report.name + "/" + pair.id + ": ";
    try {
      const DepthMap pred = load_depth(pair.pred);
      DepthMap gt = load_depth(pair.gt);
      if (mask_dir) {
        // A missing mask means every pixel is valid.
        const fs::path mask_path = *mask_dir / (pair.id + ".png");
        if (fs::exists(mask_path)) gt = with_mask(gt, mask_path);
      }
      report.rows[i] = evaluate_pair(pred, gt, pair.id);
    } catch (const DimensionError& e) {
      throw DimensionError(where + e.what());
    } catch (const UndefinedMetricError& e) {
      throw UndefinedMetricError(where + e.what());
    } catch (const FormatError& e) {
      throw FormatError(where + e.what(), e.offset());
    }
  });
  report.summary = aggregate(report.rows);
  return report;
}

std::vector<ThicknessBin> thickness_histogram(const std::vector<double>& thicknesses,
                                              double bin_width) {
  if (!(bin_width > 0.0)) throw ConfigError("bin width must be positive");
  std::vector<ThicknessBin> bins;
  if (thicknesses.empty()) return bins;
  const double top = *std::max_element(thicknesses.begin(), thicknesses.end());
  const auto nbins = static_cast<std::size_t>(std::floor(top / bin_width)) + 1;
  bins.resize(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    bins[k].lower = static_cast<double>(k) * bin_width;
    bins[k].upper = static_cast<double>(k + 1) * bin_width;
  }
  for (double t : thicknesses) {
    const auto k = std::min(nbins - 1, static_cast<std::size_t>(std::floor(std::max(t, 0.0) / bin_width)));
    ++bins[k].count;
  }
  return bins;
}

}  // namespace relief
