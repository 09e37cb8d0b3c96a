#pragma once

// Stage commands behind the CLI. Every stage reads its inputs from disk and
// writes its outputs to the configured output directory, so runs can be
// resumed and inspected stage by stage.

#include <sys/resource.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "walkidx/components.hpp"
#include "walkidx/config.hpp"
#include "walkidx/error.hpp"
#include "walkidx/fields.hpp"
#include "walkidx/io.hpp"
#include "walkidx/pednet.hpp"
#include "walkidx/smooth_index.hpp"
#include "walkidx/spatial_stats.hpp"

namespace walkidx {

namespace fs = std::filesystem;

struct RunOptions {
  std::optional<unsigned> threads;  // overrides the config
  bool force = false;
  bool allow_degenerate = false;
  std::ostream* log = &std::clog;
};

struct StageReport {
  std::string name;
  bool ran = false;
  double seconds = 0.0;
  std::size_t cells = 0;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline long peak_rss_kb() {
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  return ru.ru_maxrss;
}

namespace detail {

inline unsigned threads_of(const PipelineConfig& cfg, const RunOptions& opt) {
  return opt.threads.value_or(cfg.threads);
}

inline void log_line(const RunOptions& opt, const std::string& msg) {
  if (opt.log) *opt.log << "[walkidx] " << msg << '\n';
}

inline fs::path raw_path(const PipelineConfig& c, ComponentKind k) {
  return c.output_dir / ("raw_" + std::string(to_string(k)) + ".asc");
}
inline fs::path per_capita_path(const PipelineConfig& c, ComponentKind k) {
  return c.output_dir / ("pc_" + std::string(to_string(k)) + ".asc");
}
inline fs::path smooth_path(const PipelineConfig& c, ComponentKind k) {
  return c.output_dir / ("smooth_" + std::string(to_string(k)) + ".asc");
}
inline fs::path z_path(const PipelineConfig& c, ComponentKind k) {
  return c.output_dir / ("z_" + std::string(to_string(k)) + ".asc");
}

inline constexpr std::array<ComponentKind, 4> kPerCapitaKinds = {ComponentKind::SWL, ComponentKind::SI,
                                                                  ComponentKind::GS, ComponentKind::PT};

inline RasterLayer read_on_grid(const fs::path& p, const GridSpec& grid, const char* what) {
  RasterLayer r = read_ascii_grid(p);
  require_same_grid(r.grid(), grid, what);
  return RasterLayer(grid, std::vector<double>(r.values().begin(), r.values().end()), r.nodata());
}

inline std::string seconds_text(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", s);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

inline void ensure_output_dir(const PipelineConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output_dir.string());
}

/// Polygon covering the whole grid, used when no admin units are configured.
inline PolygonGeometry grid_unit(const GridSpec& g) {
  PolygonGeometry p;
  p.outer_ring = {{g.origin_x(), g.origin_y()}, {g.max_x(), g.origin_y()}, {g.max_x(), g.max_y()},
                  {g.origin_x(), g.max_y()}, {g.origin_x(), g.origin_y()}};
  p.properties["id"] = "grid";
  return p;
}

inline std::vector<PolygonGeometry> admin_units(const PipelineConfig& cfg, const GridSpec& grid) {
  if (cfg.inputs.admin) return read_polygons_geojson(*cfg.inputs.admin);
  return {grid_unit(grid)};
}

}  // namespace detail

inline GridSpec resolve_grid(const PipelineConfig& cfg) {
  if (cfg.grid) return *cfg.grid;
  return read_ascii_grid(require_input(cfg.inputs.pop, "input.pop")).grid();
}

inline PedestrianGraph load_graph(const PipelineConfig& cfg) {
  const auto& edges_path = require_input(cfg.inputs.edges, "input.edges");
  if (cfg.inputs.nodes) {
    const auto nodes = read_nodes_csv(require_input(cfg.inputs.nodes, "input.nodes"));
    return build_graph(nodes, read_edges_csv(edges_path, &nodes));
  }
  const auto edges = read_edges_csv(edges_path);
  return build_graph(infer_nodes(edges), edges);
}

// ---------------------------------------------------------------------------
// components

inline std::vector<fs::path> components_outputs(const PipelineConfig& cfg) {
  std::vector<fs::path> out;
  for (auto k : kAllKinds) out.push_back(detail::raw_path(cfg, k));
  if (cfg.per_capita)
    for (auto k : detail::kPerCapitaKinds) out.push_back(detail::per_capita_path(cfg, k));
  return out;
}

inline StageReport cmd_components(const PipelineConfig& cfg, const RunOptions& opt = {}) {
  detail::Timer timer;
  validate_inputs(cfg);
  const unsigned threads = detail::threads_of(cfg, opt);
  const GridSpec grid = resolve_grid(cfg);

  // Read everything before writing anything.
  const PedestrianGraph graph = load_graph(cfg);
  const RasterLayer ndvi = read_ascii_grid(*cfg.inputs.ndvi);
  const RasterLayer dem = read_ascii_grid(*cfg.inputs.dem);
  const RasterLayer corine = detail::read_on_grid(*cfg.inputs.corine, grid, "input.corine");
  const auto green = read_polygons_geojson(*cfg.inputs.green);
  const auto stops = read_points_csv(*cfg.inputs.transit);
  std::optional<RasterLayer> pop;
  if (cfg.per_capita) pop = detail::read_on_grid(*cfg.inputs.pop, grid, "input.pop");
  detail::log_line(opt, "components: graph with " + std::to_string(graph.node_count()) + " nodes, " +
                            std::to_string(graph.edge_count()) + " edges; grid " +
                            std::to_string(grid.n_rows()) + "x" + std::to_string(grid.n_cols()));

  std::vector<ComponentField> fields;
  fields.push_back(clip_walk_length(graph, grid));
  fields.push_back(count_intersections(graph, grid));
  fields.push_back(green_fraction_field(green, grid, cfg.gs_supersample, threads));
  fields.push_back(ndvi_field(ndvi, grid));
  fields.push_back(slope_field(dem, grid));
  fields.push_back(pt_field(stops, grid));
  fields.push_back(lum_field(corine, grid, cfg.lum_window_radius));
  {
    const IsochroneEngine engine(graph, grid, cfg.iso);
    fields.push_back(iso_area_field(engine, threads));
  }
  for (const auto& f : fields)
    if (!field_in_range(f))
      throw Error(ErrorClass::data, std::string(to_string(f.kind)) + ": values outside the valid range");

  detail::ensure_output_dir(cfg);
  for (const auto& f : fields) write_ascii_grid(f.values, detail::raw_path(cfg, f.kind));
  if (pop)
    for (const auto& f : fields)
      if (std::find(detail::kPerCapitaKinds.begin(), detail::kPerCapitaKinds.end(), f.kind) !=
          detail::kPerCapitaKinds.end())
        write_ascii_grid(per_capita(f, *pop).values, detail::per_capita_path(cfg, f.kind));
  return {"components", true, timer.seconds(), grid.size()};
}

// ---------------------------------------------------------------------------
// index

inline std::vector<fs::path> index_outputs(const PipelineConfig& cfg) {
  std::vector<fs::path> out;
  for (auto k : kAllKinds) {
    out.push_back(detail::smooth_path(cfg, k));
    out.push_back(detail::z_path(cfg, k));
  }
  for (const char* f : {"index.asc", "deciles.asc", "norm_stats.csv"}) out.push_back(cfg.output_dir / f);
  return out;
}

inline DomainMask load_domain(const PipelineConfig& cfg, const GridSpec& grid) {
  if (!cfg.zscore_mask) return std::nullopt;
  const RasterLayer mask = detail::read_on_grid(*cfg.zscore_mask, grid, "zscore.domain");
  std::vector<bool> inside(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) inside[i] = !mask.is_nodata(i) && mask[i] != 0.0;
  return inside;
}

inline StageReport cmd_index(const PipelineConfig& cfg, const RunOptions& opt = {}) {
  detail::Timer timer;
  const unsigned threads = detail::threads_of(cfg, opt);
  const GridSpec grid = resolve_grid(cfg);
  std::vector<ComponentField> raws;
  for (auto k : kAllKinds) {
    const auto p = detail::raw_path(cfg, k);
    if (!fs::exists(p)) throw ConfigError("raw raster missing: " + p.string() + " (run 'components' first)");
    raws.push_back({k, detail::read_on_grid(p, grid, p.string().c_str())});
  }
  const DomainMask domain = load_domain(cfg, grid);
  const PedestrianGraph graph = load_graph(cfg);
  const IsochroneEngine engine(graph, grid, cfg.iso);
  const auto smoothed = smooth_components(raws, engine, cfg.decay, threads);
  detail::log_line(opt, "index: smoothed 8 components over " + std::to_string(grid.size()) + " cells");

  std::map<ComponentKind, ZScoreField> z;
  std::vector<NormStats> stats;
  for (const auto& s : smoothed) {
    try {
      auto [zf, st] = zscore(s, domain);
      z.emplace(s.kind, std::move(zf));
      stats.push_back(st);
    } catch (const DegenerateField&) {
      if (!opt.allow_degenerate) throw;
      detail::log_line(opt, "index: " + std::string(to_string(s.kind)) + " is constant; z set to 0");
      auto [zf, st] = zero_zscore(s, domain);
      z.emplace(s.kind, std::move(zf));
      stats.push_back(st);
    }
  }
  const IndexField index = compose_index(z, cfg.weights);
  const DecileField dec = deciles(index);

  detail::ensure_output_dir(cfg);
  for (const auto& s : smoothed) write_ascii_grid(s.values, detail::smooth_path(cfg, s.kind));
  for (const auto& [k, zf] : z) write_ascii_grid(zf.values, detail::z_path(cfg, k));
  write_ascii_grid(index.values, cfg.output_dir / "index.asc");
  write_ascii_grid(dec.labels, cfg.output_dir / "deciles.asc");
  std::string csv = "kind,mean,std,degenerate\n";
  for (const auto& st : stats)
    csv += std::string(to_string(st.kind)) + "," + format_real(st.mean) + "," + format_real(st.std) + "," +
           (st.degenerate ? "1" : "0") + "\n";
  detail::write_file(cfg.output_dir / "norm_stats.csv", csv);
  return {"index", true, timer.seconds(), grid.size()};
}

// ---------------------------------------------------------------------------
// aggregate

inline std::vector<fs::path> aggregate_outputs(const PipelineConfig& cfg) {
  std::vector<fs::path> out = {cfg.output_dir / "aggregates.csv", cfg.output_dir / "corr.csv",
                               cfg.output_dir / "cdf.csv"};
  if (cfg.inputs.urbanization) out.push_back(cfg.output_dir / "strata.csv");
  return out;
}

inline std::string corr_csv(const std::vector<std::string>& names, const CorrMatrix& m) {
  std::string csv = "variable";
  for (const auto& n : names) csv += "," + n;
  csv += "\n";
  for (std::size_t a = 0; a < names.size(); ++a) {
    csv += names[a];
    for (std::size_t b = 0; b < names.size(); ++b) csv += "," + format_optional(m.empty() ? std::nullopt : m[a][b]);
    csv += "\n";
  }
  return csv;
}

inline StageReport cmd_aggregate(const PipelineConfig& cfg, const RunOptions& opt = {}) {
  detail::Timer timer;
  const GridSpec grid = resolve_grid(cfg);
  const RasterLayer pop = detail::read_on_grid(require_input(cfg.inputs.pop, "input.pop"), grid, "input.pop");
  std::vector<SmoothedField> smoothed;
  for (auto k : kAllKinds) smoothed.push_back({k, detail::read_on_grid(detail::smooth_path(cfg, k), grid, "smoothed raster")});
  const IndexField index{detail::read_on_grid(cfg.output_dir / "index.asc", grid, "index raster")};
  const DecileField dec{detail::read_on_grid(cfg.output_dir / "deciles.asc", grid, "decile raster")};
  const auto polygons = detail::admin_units(cfg, grid);

  AggregateResult agg = aggregate_polygons(smoothed, index, pop, polygons, grid);
  for (const auto& id : agg.omitted) detail::log_line(opt, "aggregate: unit '" + id + "' contains no cells; omitted");

  std::vector<std::string> extra_names;
  if (cfg.per_capita) {
    const auto units = cells_by_unit(polygons, grid);
    for (auto k : detail::kPerCapitaKinds) {
      const RasterLayer pc = detail::read_on_grid(detail::per_capita_path(cfg, k), grid, "per-capita raster");
      extra_names.push_back(std::string(to_string(k)) + "_per_capita");
      std::size_t r = 0;
      for (const auto& [id, cells] : units) {
        if (cells.empty()) continue;
        agg.records[r++].extra.emplace_back(extra_names.back(), pop_weighted_mean(pc, pop, cells));
      }
    }
  }

  std::string csv = "unit_id";
  for (auto k : kAllKinds) csv += "," + std::string(to_string(k));
  csv += ",index_pw_mean,population,cell_count";
  for (const auto& n : extra_names) csv += "," + n;
  csv += "\n";
  for (const auto& r : agg.records) {
    csv += r.unit_id;
    for (const auto& m : r.component_means) csv += "," + format_optional(m);
    csv += "," + format_optional(r.index_pw_mean) + "," + format_real(r.population) + "," +
           std::to_string(r.cell_count);
    for (const auto& [name, v] : r.extra) csv += "," + format_optional(v);
    csv += "\n";
  }
  detail::ensure_output_dir(cfg);
  detail::write_file(cfg.output_dir / "aggregates.csv", csv);

  std::vector<std::string> names;
  for (auto k : kAllKinds) names.emplace_back(to_string(k));
  names.emplace_back("INDEX");
  CorrMatrix corr;
  if (agg.records.size() >= 3) corr = corr_matrix(correlation_rows(agg.records));
  else detail::log_line(opt, "aggregate: fewer than 3 units; correlation matrix left empty");
  detail::write_file(cfg.output_dir / "corr.csv", corr_csv(names, corr));

  const auto every = all_cells(grid);
  std::string cdf = "value,cum_pop_share\n";
  if (auto curve = pop_weighted_cdf(index.values, pop, every))
    for (const auto& p : *curve) cdf += format_real(p.value) + "," + format_real(p.cum_pop_share) + "\n";
  detail::write_file(cfg.output_dir / "cdf.csv", cdf);

  if (cfg.inputs.urbanization) {
    const RasterLayer urb = detail::read_on_grid(*cfg.inputs.urbanization, grid, "input.urbanization");
    const auto strata = stratify_by_urbanization(index.values, dec, pop, urb, grid);
    std::array<std::vector<CellId>, 7> class_cells;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (!urb.is_nodata(i) && urb[i] >= 1.0 && urb[i] <= 7.0)
        class_cells[static_cast<std::size_t>(urb[i]) - 1].push_back(grid.cell(i));
    std::string s = "class,name,cells,population,pop_share,index_pw_mean,pct_below_decile";
    for (int d = 1; d <= 10; ++d) s += ",pop_decile_" + std::to_string(d);
    s += "\n";
    for (std::size_t k = 0; k < 7; ++k) {
      const auto& st = strata[k];
      s += std::to_string(st.urban_class) + "," + std::string(kUrbanizationNames[k]) + "," +
           std::to_string(st.cell_count) + "," + format_real(st.population) + "," + format_optional(st.pop_share) +
           "," + format_optional(st.pw_mean) + "," +
           format_optional(pct_below_decile(dec, pop, class_cells[k], cfg.decile_threshold));
      for (double m : st.pop_by_decile) s += "," + format_real(m);
      s += "\n";
    }
    detail::write_file(cfg.output_dir / "strata.csv", s);
  }
  return {"aggregate", true, timer.seconds(), grid.size()};
}

// ---------------------------------------------------------------------------
// moran

inline StageReport cmd_moran(const PipelineConfig& cfg, const RunOptions& opt = {}) {
  detail::Timer timer;
  const GridSpec grid = resolve_grid(cfg);
  const IndexField index{detail::read_on_grid(cfg.output_dir / "index.asc", grid, "index raster")};
  auto units = cells_by_unit(detail::admin_units(cfg, grid), grid);
  if (!cfg.moran_units.empty()) {
    decltype(units) selected;
    for (const auto& id : cfg.moran_units) {
      auto it = std::find_if(units.begin(), units.end(), [&](const auto& u) { return u.first == id; });
      if (it == units.end()) throw ConfigError("moran.units: unknown unit '" + id + "'");
      selected.push_back(*it);
    }
    units = std::move(selected);
  }
  std::string csv = "unit_id,I,N,W\n";
  for (const auto& [id, cells] : units) {
    try {
      const auto w = build_spatial_weights(cells, grid, cfg.moran_scheme);
      const auto m = morans_i(index.values, w);
      csv += id + "," + format_real(m.I) + "," + std::to_string(m.N) + "," + format_real(m.W) + "\n";
    } catch (const Error& e) {
      if (e.error_class() != ErrorClass::degenerate) throw;
      detail::log_line(opt, "moran: unit '" + id + "': " + e.what());
      csv += id + ",,,\n";
    }
  }
  detail::ensure_output_dir(cfg);
  detail::write_file(cfg.output_dir / "moran.csv", csv);
  return {"moran", true, timer.seconds(), grid.size()};
}

// ---------------------------------------------------------------------------
// render

inline StageReport cmd_render(const PipelineConfig& cfg, const RunOptions& = {}) {
  detail::Timer timer;
  const GridSpec grid = resolve_grid(cfg);
  const DecileField dec{detail::read_on_grid(cfg.output_dir / "deciles.asc", grid, "decile raster")};
  detail::ensure_output_dir(cfg);
  render_decile_map(dec, cfg.output_dir / "deciles.ppm");
  return {"render", true, timer.seconds(), grid.size()};
}

// ---------------------------------------------------------------------------
// manifest and full pipeline

inline std::string config_hash(const PipelineConfig& cfg) { return hex64(fnv1a64(cfg.canonical)); }

/// Writes manifest.json. Stage entries from an earlier manifest with the same
/// config hash are kept unless this run reports the same stage.
inline void write_manifest(const PipelineConfig& cfg, const std::vector<StageReport>& stages, unsigned threads) {
  const auto path = cfg.output_dir / "manifest.json";
  std::vector<nlohmann::ordered_json> entries;
  if (fs::exists(path)) {
    try {
      const auto old = nlohmann::ordered_json::parse(detail::read_file(path));
      if (old.at("config_hash") == config_hash(cfg))
        for (const auto& e : old.at("stages")) entries.push_back(e);
    } catch (const std::exception&) {
      entries.clear();
    }
  }
  for (const auto& s : stages) {
    nlohmann::ordered_json e = {
        {"name", s.name}, {"status", s.ran ? "ran" : "skipped"}, {"seconds", s.seconds}, {"cells", s.cells}};
    auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& x) { return x.at("name") == s.name; });
    if (it != entries.end()) *it = e;
    else entries.push_back(e);
  }
  nlohmann::ordered_json m;
  m["config_hash"] = config_hash(cfg);
  m["threads"] = threads;
  m["peak_rss_kb"] = peak_rss_kb();
  m["stages"] = entries;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cfg.output_dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  m["outputs"] = nlohmann::ordered_json::array();
  for (const auto& f : files)
    m["outputs"].push_back({{"file", f.filename().string()}, {"fnv1a64", hex64(fnv1a64(detail::read_file(f)))}});
  detail::write_file(cfg.output_dir / "manifest.json", m.dump(2) + "\n");
}

namespace detail {

inline std::optional<fs::file_time_type> mtime(const fs::path& p) {
  std::error_code ec;
  auto t = fs::last_write_time(p, ec);
  if (ec) return std::nullopt;
  return t;
}

/// True when every output exists and none is older than any input.
inline bool up_to_date(const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  std::optional<fs::file_time_type> oldest_out;
  for (const auto& o : outputs) {
    auto t = mtime(o);
    if (!t) return false;
    if (!oldest_out || *t < *oldest_out) oldest_out = t;
  }
  for (const auto& i : inputs) {
    auto t = mtime(i);
    if (!t || *t > *oldest_out) return false;
  }
  return true;
}

inline std::optional<std::string> previous_config_hash(const PipelineConfig& cfg) {
  const auto p = cfg.output_dir / "manifest.json";
  if (!fs::exists(p)) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(read_file(p));
    return j.at("config_hash").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline void push_if(std::vector<fs::path>& v, const std::optional<fs::path>& p) {
  if (p) v.push_back(*p);
}

}  // namespace detail

/// components -> index -> aggregate -> moran -> render, skipping stages
/// whose outputs are newer than their inputs unless opt.force is set.
inline std::vector<StageReport> cmd_pipeline(const PipelineConfig& cfg, const RunOptions& opt = {}) {
  validate_inputs(cfg);
  const unsigned threads = detail::threads_of(cfg, opt);
  const bool config_changed = detail::previous_config_hash(cfg) != std::optional<std::string>(config_hash(cfg));

  std::vector<fs::path> base;
  if (!cfg.source.empty()) base.push_back(cfg.source);
  const auto& in = cfg.inputs;

  std::vector<fs::path> comp_in = base;
  for (const auto& p : {in.nodes, in.edges, in.ndvi, in.dem, in.corine, in.green, in.transit, in.pop})
    detail::push_if(comp_in, p);
  std::vector<fs::path> index_in = base;
  for (auto k : kAllKinds) index_in.push_back(detail::raw_path(cfg, k));
  for (const auto& p : {in.nodes, in.edges, cfg.zscore_mask}) detail::push_if(index_in, p);
  std::vector<fs::path> agg_in = base;
  for (auto k : kAllKinds) agg_in.push_back(detail::smooth_path(cfg, k));
  agg_in.push_back(cfg.output_dir / "index.asc");
  agg_in.push_back(cfg.output_dir / "deciles.asc");
  for (const auto& p : {in.pop, in.admin, in.urbanization}) detail::push_if(agg_in, p);
  if (cfg.per_capita)
    for (auto k : detail::kPerCapitaKinds) agg_in.push_back(detail::per_capita_path(cfg, k));
  std::vector<fs::path> moran_in = base;
  moran_in.push_back(cfg.output_dir / "index.asc");
  detail::push_if(moran_in, in.admin);
  std::vector<fs::path> render_in = base;
  render_in.push_back(cfg.output_dir / "deciles.asc");

  struct Stage {
    const char* name;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    StageReport (*run)(const PipelineConfig&, const RunOptions&);
  };
  const std::vector<Stage> stages = {
      {"components", comp_in, components_outputs(cfg), &cmd_components},
      {"index", index_in, index_outputs(cfg), &cmd_index},
      {"aggregate", agg_in, aggregate_outputs(cfg), &cmd_aggregate},
      {"moran", moran_in, {cfg.output_dir / "moran.csv"}, &cmd_moran},
      {"render", render_in, {cfg.output_dir / "deciles.ppm"}, &cmd_render},
  };

  RunOptions stage_opt = opt;
  stage_opt.threads = threads;
  std::vector<StageReport> reports;
  bool upstream_ran = false;
  for (const auto& st : stages) {
    if (!opt.force && !config_changed && !upstream_ran && detail::up_to_date(st.inputs, st.outputs)) {
      detail::log_line(opt, std::string(st.name) + ": up to date, skipped");
      reports.push_back({st.name, false, 0.0, 0});
      continue;
    }
    detail::log_line(opt, std::string(st.name) + ": running");
    StageReport r;
    try {
      r = st.run(cfg, stage_opt);
    } catch (const Error& e) {
      throw Error(e.error_class(), std::string("stage ") + st.name + ": " + e.what());
    }
    upstream_ran = true;
    detail::log_line(opt, std::string(st.name) + ": done in " + detail::seconds_text(r.seconds) + " s, peak RSS " +
                              std::to_string(peak_rss_kb() / 1024) + " MiB");
    reports.push_back(r);
  }
  detail::ensure_output_dir(cfg);
  write_manifest(cfg, reports, threads);
  return reports;
}

}  // namespace walkidx
