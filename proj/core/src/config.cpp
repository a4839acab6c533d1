#include "relief/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <variant>

#include "relief/error.hpp"

namespace relief {

namespace {

using Scalar = std::variant<double, bool, std::string>;
using FlatConfig = std::map<std::string, Scalar>;

double as_number(const std::string& key, const Scalar& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw ConfigError(key + ": expected a number");
}

std::size_t as_count(const std::string& key, const Scalar& v) {
  const double d = as_number(key, v);
  if (!(d >= 0.0) || d != std::floor(d) || d > 1e15)
    throw ConfigError(key + ": expected a non-negative integer");
  return static_cast<std::size_t>(d);
}

bool as_bool(const std::string& key, const Scalar& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError(key + ": expected true or false");
}

const std::string& as_string(const std::string& key, const Scalar& v) {
  if (const std::string* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError(key + ": expected a string");
}

void apply_flat(PipelineConfig& cfg, const FlatConfig& flat) {
  for (const auto& [key, value] : flat) {
    if (key == "fusion.tau") cfg.fusion.transform.tau = as_number(key, value);
    else if (key == "fusion.k") cfg.fusion.transform.k = as_number(key, value);
    else if (key == "fusion.scale_min") cfg.fusion.scale_range.min = as_number(key, value);
    else if (key == "fusion.scale_max") cfg.fusion.scale_range.max = as_number(key, value);
    else if (key == "integration.mu") cfg.integration.mu = as_number(key, value);
    else if (key == "integration.cg_tolerance") cfg.integration.cg_tolerance = as_number(key, value);
    else if (key == "integration.max_cg_iters") cfg.integration.max_cg_iters = as_count(key, value);
    else if (key == "integration.outer_iters") cfg.integration.outer_iters = as_count(key, value);
    else if (key == "integration.edge_sigma") cfg.integration.edge_sigma = as_number(key, value);
    else if (key == "io.depth_format") cfg.io.depth_format = parse_depth_format(as_string(key, value));
    else if (key == "io.write_viz") cfg.io.write_viz = as_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  cfg.validate();
}

void require_known_section(const std::string& name) {
  if (name != "fusion" && name != "integration" && name != "io")
    throw ConfigError("unknown config section '" + name + "'");
}

void flatten_json(const nlohmann::json& j, const std::string& prefix, FlatConfig& out) {
  if (!j.is_object()) throw ConfigError("config: expected an object at '" + prefix + "'");
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (prefix.empty() && v.is_object()) require_known_section(k);
    if (v.is_object()) flatten_json(v, key, out);
    else if (v.is_boolean()) out[key] = v.get<bool>();
    else if (v.is_number()) out[key] = v.get<double>();
    else if (v.is_string()) out[key] = v.get<std::string>();
    else throw ConfigError("config: unsupported value for '" + key + "'");
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

Scalar parse_scalar(std::string_view text, const std::string& where) {
  text = trim(text);
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
      text.back() == text.front()) {
    return std::string(text.substr(1, text.size() - 2));
  }
  std::string digits;
  for (char c : text)
    if (c != '_') digits += c;
  char* end = nullptr;
  const double v = std::strtod(digits.c_str(), &end);
  if (digits.empty() || end != digits.c_str() + digits.size() || !std::isfinite(v))
    throw ConfigError(where + ": unsupported value '" + std::string(text) + "'");
  return v;
}

/// Strips a '#' comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(fusion.transform.tau > 0.0) || !std::isfinite(fusion.transform.tau))
    throw ConfigError("fusion.tau must be > 0");
  if (!(fusion.transform.k >= 1.0) || !std::isfinite(fusion.transform.k))
    throw ConfigError("fusion.k must be >= 1");
  if (!(fusion.scale_range.min > 0.0) || !(fusion.scale_range.max >= fusion.scale_range.min) ||
      !std::isfinite(fusion.scale_range.max))
    throw ConfigError("fusion.scale_min/scale_max must satisfy 0 < min <= max");
  integration.validate();
}

PipelineConfig parse_config_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("config")) j = j.at("config");
  FlatConfig flat;
  flatten_json(j, "", flat);
  PipelineConfig cfg;
  apply_flat(cfg, flat);
  return cfg;
}

PipelineConfig parse_config_toml(std::string_view text) {
  FlatConfig flat;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3 || line[1] == '[')
        throw ConfigError(where + ": malformed table header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      require_known_section(section);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (flat.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
    flat[full] = parse_scalar(line.substr(eq + 1), where);
  }
  PipelineConfig cfg;
  apply_flat(cfg, flat);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (path.extension() == ".toml") return parse_config_toml(text);
  return parse_config_json(text);
}

void apply_override(PipelineConfig& cfg, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
  FlatConfig flat;
  const std::string key(trim(assignment.substr(0, eq)));
  std::string_view value = trim(assignment.substr(eq + 1));
  if (key == "io.depth_format" && !value.empty() && value.front() != '"')
    flat[key] = std::string(value);
  else
    flat[key] = parse_scalar(value, "override " + key);
  apply_flat(cfg, flat);
}

std::string config_to_json(const PipelineConfig& cfg) {
  const nlohmann::json j = {
      {"fusion",
       {{"tau", cfg.fusion.transform.tau},
        {"k", cfg.fusion.transform.k},
        {"scale_min", cfg.fusion.scale_range.min},
        {"scale_max", cfg.fusion.scale_range.max}}},
      {"integration",
       {{"mu", cfg.integration.mu},
        {"cg_tolerance", cfg.integration.cg_tolerance},
        {"max_cg_iters", cfg.integration.max_cg_iters},
        {"outer_iters", cfg.integration.outer_iters},
        {"edge_sigma", cfg.integration.edge_sigma}}},
      {"io",
       {{"depth_format", std::string(to_string(cfg.io.depth_format))},
        {"write_viz", cfg.io.write_viz}}}};
  return j.dump(2);
}

}  // namespace relief
