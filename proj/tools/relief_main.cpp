// relief: batch front end for pseudo-label generation, depth refinement,
// benchmark evaluation and small conversion utilities.
//
// Logs go to stderr, data to files, and one JSON summary line per command
// to stdout. Failures print a single JSON line {"error": ...} on stderr and
// exit with status 1.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "relief/config.hpp"
#include "relief/error.hpp"
#include "relief/io.hpp"
#include "relief/metrics.hpp"
#include "relief/pipeline.hpp"

namespace {

using relief::PipelineConfig;
namespace fs = std::filesystem;

/// Options shared by the commands that take a pipeline configuration.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<double> tau, k, scale_min, scale_max;
  std::optional<double> mu, cg_tolerance, edge_sigma;
  std::optional<std::size_t> max_cg_iters, outer_iters;
  std::optional<std::string> depth_format;
  bool viz = false;

  void attach(CLI::App* cmd, bool with_fusion) {
    cmd->add_option("--config", config_path, "JSON or TOML config file (a manifest also works)");
    cmd->add_option("--set", overrides, "Override a config key, e.g. --set integration.mu=0.05");
    if (with_fusion) {
      cmd->add_option("--tau", tau, "Slope knee of the normal transformation (px/px)");
      cmd->add_option("--k", k, "Sharpness of the normal transformation");
      cmd->add_option("--scale-min", scale_min, "Lower end of the global scale search");
      cmd->add_option("--scale-max", scale_max, "Upper end of the global scale search");
      cmd->add_option("--outer-iters", outer_iters, "Reweighted integration passes");
      cmd->add_option("--edge-sigma", edge_sigma, "Residual scale of the edge weights (px/px)");
      cmd->add_option("--depth-format", depth_format, "pfm or png16");
    }
    cmd->add_option("--mu", mu, "Depth-fidelity weight");
    cmd->add_option("--cg-tolerance", cg_tolerance, "Relative residual target");
    cmd->add_option("--max-cg-iters", max_cg_iters, "CG iteration cap (0 = 10 sqrt(N))");
    cmd->add_flag("--viz", viz, "Also write 8-bit visualization PNGs");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : relief::load_config(config_path);
    for (const std::string& o : overrides) relief::apply_override(cfg, o);
    if (tau) cfg.fusion.transform.tau = *tau;
    if (k) cfg.fusion.transform.k = *k;
    if (scale_min) cfg.fusion.scale_range.min = *scale_min;
    if (scale_max) cfg.fusion.scale_range.max = *scale_max;
    if (mu) cfg.integration.mu = *mu;
    if (cg_tolerance) cfg.integration.cg_tolerance = *cg_tolerance;
    if (edge_sigma) cfg.integration.edge_sigma = *edge_sigma;
    if (max_cg_iters) cfg.integration.max_cg_iters = *max_cg_iters;
    if (outer_iters) cfg.integration.outer_iters = *outer_iters;
    if (depth_format) cfg.io.depth_format = relief::parse_depth_format(*depth_format);
    if (viz) cfg.io.write_viz = true;
    cfg.validate();
    return cfg;
  }
};

void log(const std::string& msg) { fmt::print(stderr, "[relief] {}\n", msg); }

void emit(const nlohmann::json& summary) { std::cout << summary.dump() << std::endl; }

[[noreturn]] void fail(const std::string& command, const std::string& kind,
                       const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = kind;
  extra["command"] = command;
  extra["message"] = message;
  std::cerr << extra.dump() << std::endl;
  std::exit(1);
}

void write_text(const fs::path& path, const std::string& text) {
  relief::write_file_atomic(
      path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

nlohmann::json solve_json(const relief::SolveReport& r) {
  return {{"solver_residual", r.final_relative_residual},
          {"cg_iterations", r.cg_iterations_used},
          {"converged", r.converged},
          {"energy", r.energy}};
}

nlohmann::json row_summary(const relief::MethodReport& rep) {
  const relief::MetricRow& s = rep.summary;
  return {{"method", rep.name},        {"images", rep.rows.size()},    {"eps_d", s.eps_d},
          {"depth_psnr", s.depth_psnr}, {"depth_ssim", s.depth_ssim},  {"eps_n", s.eps_n},
          {"normal_psnr", s.normal_psnr}, {"normal_ssim", s.normal_ssim},
          {"frac_11_25", s.frac_11_25}, {"frac_22_5", s.frac_22_5},    {"rank", rep.rank}};
}

unsigned default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relief geometry toolkit: pseudo-labels, refinement, evaluation"};
  app.require_subcommand(1);
  unsigned jobs = default_jobs();
  app.add_option("-j,--jobs", jobs, "Worker threads for directory commands")
      ->envname("RELIEF_JOBS")
      ->check(CLI::PositiveNumber);

  // pseudo-label
  auto* pl = app.add_subcommand("pseudo-label", "Fuse relative depth and detail normals into a depth label");
  relief::PseudoLabelRequest pl_req;
  std::string pl_mask;
  ConfigFlags pl_flags;
  pl->add_option("rel_depth", pl_req.rel_depth, "Relative depth (.pfm or .png)")->required();
  pl->add_option("detail_normal", pl_req.detail_normal, "Detail normals (3-channel .pfm)")->required();
  pl->add_option("out_dir", pl_req.out_dir, "Output directory")->required();
  pl->add_option("--mask", pl_mask, "8-bit PNG mask of valid pixels");
  pl_flags.attach(pl, true);

  // refine
  auto* rf = app.add_subcommand("refine", "Refine a rough depth label with detail normals");
  relief::RefineRequest rf_req;
  std::string rf_mask;
  ConfigFlags rf_flags;
  rf->add_option("rough_depth", rf_req.rough_depth, "Rough depth (.pfm or .png)")->required();
  rf->add_option("normal", rf_req.detail_normal, "Detail normals (3-channel .pfm)")->required();
  rf->add_option("out", rf_req.out, "Output depth (.pfm or .png)")->required();
  rf->add_option("--mask", rf_mask, "8-bit PNG mask of valid pixels");
  rf_flags.attach(rf, false);

  // eval
  auto* ev = app.add_subcommand("eval", "Score predicted depth maps against ground truth");
  std::string ev_pred, ev_gt, ev_out, ev_name = "pred", ev_manifest, ev_mask_dir, ev_rank = "depth";
  std::vector<std::string> ev_compare;
  bool ev_allow_partial = false;
  ev->add_option("pred_dir", ev_pred, "Directory of predictions")->required();
  ev->add_option("gt_dir", ev_gt, "Directory of ground truth")->required();
  ev->add_option("out_report", ev_out, "Report path; CSV and JSON are written side by side")->required();
  ev->add_option("--name", ev_name, "Method name of pred_dir in the report");
  ev->add_option("--compare", ev_compare, "Extra method as NAME=DIR (repeatable)");
  ev->add_option("--manifest", ev_manifest, "JSON pairing file overriding stem matching for pred_dir");
  ev->add_option("--mask-dir", ev_mask_dir, "Directory of <id>.png ground-truth masks");
  ev->add_option("--rank-by", ev_rank, "Ranking metrics: depth (six) or normal (five)")
      ->check(CLI::IsMember({"depth", "normal"}));
  ev->add_flag("--allow-partial", ev_allow_partial, "Score matched pairs even if some files are unmatched");

  // convert
  auto* cv = app.add_subcommand("convert", "Convert a depth map between PFM and PNG16");
  std::string cv_in, cv_out;
  cv->add_option("input", cv_in)->required();
  cv->add_option("output", cv_out)->required();

  // viz
  auto* vz = app.add_subcommand("viz", "Write an 8-bit visualization PNG");
  std::string vz_in, vz_out;
  bool vz_normals = false;
  vz->add_option("input", vz_in, "Depth map, or normal PFM with --normals")->required();
  vz->add_option("output", vz_out, "PNG path")->required();
  vz->add_flag("--normals", vz_normals, "Input is a normal map; write encoded RGB");

  // stats
  auto* st = app.add_subcommand("stats", "Thickness histogram over depth files");
  std::vector<std::string> st_inputs;
  std::string st_out;
  double st_bin = 25.0;
  st->add_option("inputs", st_inputs, "Depth files or directories")->required();
  st->add_option("-o,--out", st_out, "Histogram CSV path")->required();
  st->add_option("--bin-width", st_bin, "Bin width in pixels")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*pl) {
      if (!pl_mask.empty()) pl_req.mask = pl_mask;
      const PipelineConfig cfg = pl_flags.resolve();
      const relief::PseudoLabelResult r = relief::run_pseudo_label(pl_req, cfg);
      log(fmt::format("scale {:.6g} (objective {:.4f} deg), thickness {:.3f} px", r.scale.scale,
                      r.scale.objective, r.thickness));
      nlohmann::json s = solve_json(r.solve);
      s["command"] = command;
      s["scale"] = r.scale.scale;
      s["objective"] = r.scale.objective;
      s["thickness"] = r.thickness;
      s["depth"] = r.depth_path.string();
      s["fused_normal"] = r.fused_normal_path.string();
      s["manifest"] = r.manifest_path.string();
      emit(s);
    } else if (*rf) {
      if (!rf_mask.empty()) rf_req.mask = rf_mask;
      const PipelineConfig cfg = rf_flags.resolve();
      const relief::RefineResult r = relief::run_refine(rf_req, cfg);
      nlohmann::json s = solve_json(r.solve);
      s["command"] = command;
      s["mu"] = cfg.integration.mu;
      s["thickness"] = r.thickness;
      s["rms_change"] = r.rms_change;
      s["output"] = rf_req.out.string();
      emit(s);
    } else if (*ev) {
      std::vector<std::pair<std::string, relief::Pairing>> methods;
      methods.emplace_back(ev_name, ev_manifest.empty() ? relief::pair_by_stem(ev_pred, ev_gt)
                                                        : relief::pairs_from_manifest(ev_manifest));
      for (const std::string& entry : ev_compare) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos || eq == 0)
          fail(command, "usage", "--compare expects NAME=DIR, got '" + entry + "'");
        methods.emplace_back(entry.substr(0, eq), relief::pair_by_stem(entry.substr(eq + 1), ev_gt));
      }
      nlohmann::json unmatched = nlohmann::json::object();
      for (const auto& [name, pairing] : methods) {
        if (pairing.pairs.empty())
          fail(command, "unmatched", "no matching prediction/ground-truth pairs for " + name);
        if (!pairing.unmatched.empty()) {
          unmatched[name] = pairing.unmatched;
          for (const std::string& u : pairing.unmatched) log(name + ": unmatched " + u);
        }
      }
      if (!unmatched.empty() && !ev_allow_partial)
        fail(command, "unmatched", "unmatched files (use --allow-partial to score the rest)",
             {{"unmatched", unmatched}});

      const std::optional<fs::path> mask_dir =
          ev_mask_dir.empty() ? std::nullopt : std::optional<fs::path>(ev_mask_dir);
      std::vector<relief::MethodReport> reports;
      for (const auto& [name, pairing] : methods)
        reports.push_back(relief::evaluate_pairs(name, pairing.pairs, mask_dir, jobs));
      const relief::RankScheme scheme = relief::parse_rank_scheme(ev_rank);
      relief::finalize_reports(reports, scheme);

      fs::path csv_path = ev_out, json_path = ev_out;
      csv_path.replace_extension(".csv");
      json_path.replace_extension(".json");
      if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
      relief::OutputSet outputs;
      std::ostringstream csv;
      relief::write_report_csv(csv, reports);
      write_text(outputs.add(csv_path), csv.str());
      write_text(outputs.add(json_path), relief::report_json(reports, scheme));
      outputs.commit();
      for (const relief::MethodReport& rep : reports) {
        nlohmann::json s = row_summary(rep);
        s["command"] = command;
        emit(s);
      }
    } else if (*cv) {
      const relief::DepthMap map = relief::load_depth(cv_in);
      relief::OutputSet outputs;
      relief::save_depth_tracked(outputs, map, cv_out, relief::depth_format_from_path(cv_out));
      outputs.commit();
      emit({{"command", command}, {"output", cv_out}, {"thickness", map.thickness()},
            {"width", map.width()}, {"height", map.height()}});
    } else if (*vz) {
      bool degenerate = false;
      if (vz_normals) {
        relief::save_png8(relief::viz_normals(relief::load_normals(vz_in)), vz_out);
      } else {
        const relief::DepthMap map = relief::load_depth(vz_in);
        const relief::DepthVisualization viz = relief::viz_depth(map);
        degenerate = viz.degenerate;
        if (degenerate) log("warning: constant depth map, writing an all-zero image");
        relief::Image8 img{map.width(), map.height(), 1,
                           {viz.pixels.data().begin(), viz.pixels.data().end()}};
        relief::save_png8(img, vz_out);
      }
      emit({{"command", command}, {"output", vz_out}, {"warning", degenerate ? "constant-depth" : ""}});
    } else if (*st) {
      std::vector<fs::path> files;
      for (const std::string& in : st_inputs) {
        if (fs::is_directory(in)) {
          for (const auto& [stem, path] : relief::list_depth_files(in)) files.push_back(path);
        } else {
          files.emplace_back(in);
        }
      }
      if (files.empty()) fail(command, "io", "no depth files found");
      std::vector<double> thickness(files.size());
      relief::parallel_for(files.size(), jobs,
                           [&](std::size_t i) { thickness[i] = relief::load_depth(files[i]).thickness(); });
      const auto bins = relief::thickness_histogram(thickness, st_bin);
      std::string csv = "bin_lower,bin_upper,count\n";
      for (const auto& b : bins) csv += fmt::format("{},{},{}\n", b.lower, b.upper, b.count);
      if (fs::path(st_out).has_parent_path()) fs::create_directories(fs::path(st_out).parent_path());
      write_text(st_out, csv);
      double lo = thickness.front(), hi = thickness.front(), sum = 0.0;
      for (double t : thickness) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
        sum += t;
      }
      emit({{"command", command}, {"files", files.size()}, {"min", lo}, {"max", hi},
            {"mean", sum / static_cast<double>(files.size())}, {"output", st_out}});
    }
  } catch (const relief::Error& e) {
    fail(command, e.kind(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    fail(command, "io", e.what());
  } catch (const std::exception& e) {
    fail(command, "internal", e.what());
  }
  return 0;
}
