#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "relief/fusion.hpp"
#include "relief/integration.hpp"
#include "relief/io.hpp"

namespace relief {

struct IoConfig {
  DepthFormat depth_format = DepthFormat::pfm;
  /// Also write 8-bit visualization PNGs next to the outputs.
  bool write_viz = false;
};

/// Every tunable of the command-line workflows. Keys in config files:
///
///   fusion.tau  fusion.k  fusion.scale_min  fusion.scale_max
///   integration.mu  integration.cg_tolerance  integration.max_cg_iters
///   integration.outer_iters  integration.edge_sigma
///   io.depth_format ("pfm" | "png16")  io.write_viz
struct PipelineConfig {
  FusionConfig fusion;
  SolverConfig integration;
  IoConfig io;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;
};

/// Reads a JSON or TOML file (by extension; ".toml" is TOML, anything else
/// JSON). A JSON object with a top-level "config" member, such as a run
/// manifest, is read through that member. Unknown keys are rejected.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config_json(std::string_view text);
PipelineConfig parse_config_toml(std::string_view text);

/// Applies one "section.key=value" override on top of `cfg`.
void apply_override(PipelineConfig& cfg, std::string_view assignment);

/// Fully resolved configuration as a JSON object string.
std::string config_to_json(const PipelineConfig& cfg);

}  // namespace relief
