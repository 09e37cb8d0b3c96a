#pragma once

// Flat `key = value` pipeline configuration. Lines starting with '#' are
// comments. Relative paths resolve against the config file's directory.
//
//   grid.origin_x / grid.origin_y / grid.cell_size / grid.n_rows / grid.n_cols
//       optional; when absent the grid is taken from the population raster
//   input.nodes input.edges input.ndvi input.dem input.corine input.pop
//   input.urbanization input.green input.transit input.admin
//   output.dir
//   decay.sigma_m              (637.5)
//   iso.budget_s               (900)
//   iso.speed_kmh | iso.speed_mps   (5.1 km/h)
//   iso.snap_radius_m          (100)
//   index.weights.<KIND>       (SWL SI GS NDVI 0.5, SLOPE -1, PT LUM ISO 1)
//   lum.window_radius          (2)
//   gs.supersample             (10)
//   slope.method               (horn, the only supported value)
//   per_capita                 (false)
//   zscore.domain              (all | path to a mask raster, non-zero = inside)
//   moran.scheme               (queen | rook)
//   moran.units                (comma-separated unit ids; default all)
//   stats.decile_threshold     (6)
//   threads                    (available parallelism)

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "walkidx/error.hpp"
#include "walkidx/fields.hpp"
#include "walkidx/grid.hpp"
#include "walkidx/io.hpp"
#include "walkidx/parallel.hpp"
#include "walkidx/pednet.hpp"
#include "walkidx/smooth_index.hpp"

namespace walkidx {

struct InputPaths {
  std::optional<std::filesystem::path> nodes, edges, ndvi, dem, corine, pop, urbanization, green, transit,
      admin;
};

struct PipelineConfig {
  std::filesystem::path source;  // config file, if any
  InputPaths inputs;
  std::optional<GridSpec> grid;
  DecayParams decay;
  IsochroneParams iso;
  IndexWeights weights;
  int lum_window_radius = 2;
  int gs_supersample = 10;
  bool per_capita = false;
  std::optional<std::filesystem::path> zscore_mask;
  Contiguity moran_scheme = Contiguity::queen;
  std::vector<std::string> moran_units;
  int decile_threshold = 6;
  unsigned threads = default_thread_count();
  std::filesystem::path output_dir;
  /// Canonical `key=value` lines of everything that affects outputs.
  std::string canonical;
};

namespace detail {

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = {"grid.origin_x",      "grid.origin_y",     "grid.cell_size",
                               "grid.n_rows",        "grid.n_cols",       "input.nodes",
                               "input.edges",        "input.ndvi",        "input.dem",
                               "input.corine",       "input.pop",         "input.urbanization",
                               "input.green",        "input.transit",     "input.admin",
                               "output.dir",         "decay.sigma_m",     "iso.budget_s",
                               "iso.speed_kmh",      "iso.speed_mps",     "iso.snap_radius_m",
                               "lum.window_radius",  "gs.supersample",    "slope.method",
                               "per_capita",         "zscore.domain",     "moran.scheme",
                               "moran.units",        "stats.decile_threshold", "threads"};
    for (auto kind : kAllKinds) k.insert("index.weights." + std::string(to_string(kind)));
    return k;
  }();
  return keys;
}

inline double config_real(const std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  auto v = parse_double(it->second);
  if (!v || !std::isfinite(*v)) throw ConfigError(key + ": expected a number, got '" + it->second + "'");
  return *v;
}

inline std::int64_t config_int(const std::map<std::string, std::string>& kv, const std::string& key,
                               std::int64_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  auto v = parse_int(it->second);
  if (!v) throw ConfigError(key + ": expected an integer, got '" + it->second + "'");
  return *v;
}

}  // namespace detail

inline std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  for (auto line : detail::split(text, '\n')) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (!detail::known_keys().contains(key))
      throw ConfigError(source + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!kv.emplace(key, value).second)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return kv;
}

/// Builds a config from parsed keys; `base` anchors relative paths.
inline PipelineConfig make_config(const std::map<std::string, std::string>& kv,
                                  const std::filesystem::path& base) {
  using detail::config_int;
  using detail::config_real;
  PipelineConfig cfg;
  auto path_of = [&](const std::string& key) -> std::optional<std::filesystem::path> {
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) return std::nullopt;
    std::filesystem::path p(it->second);
    return p.is_absolute() ? p : base / p;
  };
  cfg.inputs = {path_of("input.nodes"), path_of("input.edges"),        path_of("input.ndvi"),
                path_of("input.dem"),   path_of("input.corine"),       path_of("input.pop"),
                path_of("input.urbanization"), path_of("input.green"), path_of("input.transit"),
                path_of("input.admin")};
  const auto out = path_of("output.dir");
  if (!out) throw ConfigError("output.dir: required key is missing");
  cfg.output_dir = *out;

  const bool any_grid = kv.contains("grid.n_rows") || kv.contains("grid.n_cols") ||
                        kv.contains("grid.origin_x") || kv.contains("grid.origin_y") ||
                        kv.contains("grid.cell_size");
  if (any_grid) {
    for (const char* k : {"grid.n_rows", "grid.n_cols", "grid.origin_x", "grid.origin_y"})
      if (!kv.contains(k)) throw ConfigError(std::string(k) + ": required when any grid.* key is set");
    cfg.grid = GridSpec(config_real(kv, "grid.origin_x", 0.0), config_real(kv, "grid.origin_y", 0.0),
                        config_real(kv, "grid.cell_size", 100.0), config_int(kv, "grid.n_rows", 0),
                        config_int(kv, "grid.n_cols", 0));
  }

  cfg.decay.sigma_m = config_real(kv, "decay.sigma_m", cfg.decay.sigma_m);
  cfg.decay.validate();
  cfg.iso.budget_s = config_real(kv, "iso.budget_s", cfg.iso.budget_s);
  if (kv.contains("iso.speed_kmh") && kv.contains("iso.speed_mps"))
    throw ConfigError("iso.speed_kmh and iso.speed_mps are mutually exclusive");
  if (kv.contains("iso.speed_kmh")) cfg.iso.speed_mps = config_real(kv, "iso.speed_kmh", 5.1) / 3.6;
  cfg.iso.speed_mps = config_real(kv, "iso.speed_mps", cfg.iso.speed_mps);
  cfg.iso.snap_radius_m = config_real(kv, "iso.snap_radius_m", cfg.iso.snap_radius_m);
  cfg.iso.validate();
  for (auto kind : kAllKinds)
    cfg.weights[kind] = config_real(kv, "index.weights." + std::string(to_string(kind)), cfg.weights[kind]);
  cfg.weights.validate();

  cfg.lum_window_radius = static_cast<int>(config_int(kv, "lum.window_radius", 2));
  if (cfg.lum_window_radius < 0) throw ConfigError("lum.window_radius must be >= 0");
  cfg.gs_supersample = static_cast<int>(config_int(kv, "gs.supersample", 10));
  if (cfg.gs_supersample < 1) throw ConfigError("gs.supersample must be >= 1");
  if (auto it = kv.find("slope.method"); it != kv.end() && it->second != "horn")
    throw ConfigError("slope.method: only 'horn' is supported");
  if (auto it = kv.find("per_capita"); it != kv.end()) {
    if (it->second == "true" || it->second == "1") cfg.per_capita = true;
    else if (it->second == "false" || it->second == "0") cfg.per_capita = false;
    else throw ConfigError("per_capita: expected true or false");
  }
  if (auto it = kv.find("zscore.domain"); it != kv.end() && it->second != "all") cfg.zscore_mask = path_of("zscore.domain");
  if (auto it = kv.find("moran.scheme"); it != kv.end()) cfg.moran_scheme = parse_contiguity(it->second);
  if (auto it = kv.find("moran.units"); it != kv.end())
    for (auto part : detail::split(it->second, ','))
      if (auto id = detail::trim(part); !id.empty()) cfg.moran_units.emplace_back(id);
  cfg.decile_threshold = static_cast<int>(config_int(kv, "stats.decile_threshold", 6));
  if (cfg.decile_threshold < 1 || cfg.decile_threshold > 10)
    throw ConfigError("stats.decile_threshold must be in 1..10");
  const auto threads = config_int(kv, "threads", default_thread_count());
  if (threads < 1) throw ConfigError("threads must be >= 1");
  cfg.threads = static_cast<unsigned>(threads);

  for (const auto& [k, v] : kv)
    if (k != "threads") cfg.canonical += k + "=" + v + "\n";
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  PipelineConfig cfg = make_config(parse_key_values(detail::read_file(path), path.string()),
                                   std::filesystem::absolute(path).parent_path());
  cfg.source = path;
  return cfg;
}

/// Checks that a required input key is set and the file exists.
inline const std::filesystem::path& require_input(const std::optional<std::filesystem::path>& p,
                                                  const char* key) {
  if (!p) throw ConfigError(std::string(key) + ": required input is not configured");
  if (!std::filesystem::exists(*p)) throw ConfigError(std::string(key) + ": file not found: " + p->string());
  return *p;
}

inline void check_optional_input(const std::optional<std::filesystem::path>& p, const char* key) {
  if (p && !std::filesystem::exists(*p))
    throw ConfigError(std::string(key) + ": file not found: " + p->string());
}

/// Validates every configured path up front.
inline void validate_inputs(const PipelineConfig& cfg) {
  require_input(cfg.inputs.edges, "input.edges");
  require_input(cfg.inputs.ndvi, "input.ndvi");
  require_input(cfg.inputs.dem, "input.dem");
  require_input(cfg.inputs.corine, "input.corine");
  require_input(cfg.inputs.pop, "input.pop");
  require_input(cfg.inputs.green, "input.green");
  require_input(cfg.inputs.transit, "input.transit");
  check_optional_input(cfg.inputs.nodes, "input.nodes");
  check_optional_input(cfg.inputs.urbanization, "input.urbanization");
  check_optional_input(cfg.inputs.admin, "input.admin");
  check_optional_input(cfg.zscore_mask, "zscore.domain");
}

}  // namespace walkidx
