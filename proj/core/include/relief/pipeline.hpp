#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relief/config.hpp"
#include "relief/fusion.hpp"
#include "relief/integration.hpp"
#include "relief/metrics.hpp"

namespace relief {

namespace fs = std::filesystem;

/// Runs fn(0..count-1) on up to `jobs` threads. Exceptions are rethrown
/// (the one from the lowest index wins) after every worker has stopped.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

/// Tracks files written by a command and deletes them unless committed.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet();

  /// Registers `path` before it is written.
  const fs::path& add(fs::path path);
  void commit() { committed_ = true; }
  const std::vector<fs::path>& paths() const { return paths_; }

 private:
  std::vector<fs::path> paths_;
  bool committed_ = false;
};

/// Writes a depth map plus, for PNG16, its sidecar; both are registered.
void save_depth_tracked(OutputSet& outputs, const DepthMap& map, const fs::path& path,
                        DepthFormat format);

// --- pseudo-label --------------------------------------------------------

struct PseudoLabelRequest {
  fs::path rel_depth;
  fs::path detail_normal;
  fs::path out_dir;
  std::optional<fs::path> mask;
};

struct PseudoLabelResult {
  ScaleSearchResult scale;
  SolveReport solve;
  double thickness = 0.0;
  fs::path fused_normal_path;
  fs::path depth_path;
  fs::path manifest_path;
  /// Manifest contents as written.
  std::string manifest_json;
};

/// Fuses relative depth with detail normals and integrates the result.
/// Writes fused_normal.pfm, pseudo_label.<pfm|png> and manifest.json into
/// out_dir. Nothing is left behind on failure.
PseudoLabelResult run_pseudo_label(const PseudoLabelRequest& request, const PipelineConfig& cfg);

// --- refine --------------------------------------------------------------

struct RefineRequest {
  fs::path rough_depth;
  fs::path detail_normal;
  fs::path out;
  std::optional<fs::path> mask;
};

struct RefineResult {
  SolveReport solve;
  double thickness = 0.0;
  /// RMS of (refined - rough) over valid pixels.
  double rms_change = 0.0;
};

RefineResult run_refine(const RefineRequest& request, const PipelineConfig& cfg);

// --- eval ----------------------------------------------------------------

struct DepthPair {
  std::string id;
  fs::path pred;
  fs::path gt;
};

struct Pairing {
  std::vector<DepthPair> pairs;
  /// Files present on one side only, as "pred:<name>" / "gt:<name>".
  std::vector<std::string> unmatched;
};

/// Depth files (.pfm / .png) of a directory keyed by stem, sorted.
std::vector<std::pair<std::string, fs::path>> list_depth_files(const fs::path& dir);

/// Matches files by filename stem.
Pairing pair_by_stem(const fs::path& pred_dir, const fs::path& gt_dir);

/// Reads an explicit pairing: a JSON array of {"id", "pred", "gt"} objects.
/// Relative paths resolve against the manifest's directory.
Pairing pairs_from_manifest(const fs::path& manifest);

/// Loads and scores every pair. Masks, when `mask_dir` is given, are read
/// from <mask_dir>/<id>.png and applied to the ground truth.
MethodReport evaluate_pairs(std::string name, const std::vector<DepthPair>& pairs,
                            const std::optional<fs::path>& mask_dir, unsigned jobs);

// --- stats ---------------------------------------------------------------

struct ThicknessBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

/// Histogram of thickness values with bins [k w, (k+1) w) from 0 up to the
/// bin holding the largest value.
std::vector<ThicknessBin> thickness_histogram(const std::vector<double>& thicknesses,
                                              double bin_width);

}  // namespace relief
