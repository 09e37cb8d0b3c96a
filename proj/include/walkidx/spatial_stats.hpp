#pragma once

// Population-weighted aggregation, urbanization strata, correlation
// matrices, population CDFs and global Moran's I on lattice contiguity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "walkidx/error.hpp"
#include "walkidx/fields.hpp"
#include "walkidx/grid.hpp"
#include "walkidx/raster.hpp"

namespace walkidx {

/// Population-weighted mean over the cells where both the value and the
/// population are present. nullopt when no usable cell carries population.
inline std::optional<double> pop_weighted_mean(const RasterLayer& field, const RasterLayer& pop,
                                               std::span<const CellId> cells) {
  double num = 0.0;
  double den = 0.0;
  for (auto c : cells) {
    if (field.is_nodata(c) || pop.is_nodata(c)) continue;
    num += field.at(c) * pop.at(c);
    den += pop.at(c);
  }
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

struct AggregateRecord {
  std::string unit_id;
  std::array<std::optional<double>, 8> component_means;  // kAllKinds order
  std::optional<double> index_pw_mean;
  double population = 0.0;
  std::size_t cell_count = 0;
  std::vector<std::pair<std::string, std::optional<double>>> extra;  // e.g. per-capita columns
};

struct AggregateResult {
  std::vector<AggregateRecord> records;
  std::vector<std::string> omitted;  // units without any cell
};

/// Groups polygons by id, in order of first appearance.
inline std::vector<std::pair<std::string, std::vector<CellId>>> cells_by_unit(
    std::span<const PolygonGeometry> polygons, const GridSpec& grid) {
  std::vector<std::pair<std::string, std::vector<CellId>>> units;
  std::map<std::string, std::size_t> slot;
  for (const auto& poly : polygons) {
    const std::string id = poly.id();
    auto [it, inserted] = slot.emplace(id, units.size());
    if (inserted) units.push_back({id, {}});
    auto cells = cells_in_polygon(poly, grid);
    auto& dst = units[it->second].second;
    dst.insert(dst.end(), cells.begin(), cells.end());
  }
  for (auto& [id, cells] : units) {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  }
  return units;
}

inline double total_population(const RasterLayer& pop, std::span<const CellId> cells) {
  double s = 0.0;
  for (auto c : cells)
    if (!pop.is_nodata(c)) s += pop.at(c);
  return s;
}

/// `fields` holds the smoothed components; missing kinds give empty means.
inline AggregateResult aggregate_polygons(std::span<const SmoothedField> fields, const IndexField& index,
                                          const RasterLayer& pop, std::span<const PolygonGeometry> polygons,
                                          const GridSpec& grid) {
  require_same_grid(pop.grid(), grid, "population raster");
  require_same_grid(index.grid(), grid, "index raster");
  AggregateResult out;
  for (const auto& [id, cells] : cells_by_unit(polygons, grid)) {
    if (cells.empty()) {
      out.omitted.push_back(id);
      continue;
    }
    AggregateRecord rec;
    rec.unit_id = id;
    for (const auto& f : fields) rec.component_means[kind_index(f.kind)] = pop_weighted_mean(f.values, pop, cells);
    rec.index_pw_mean = pop_weighted_mean(index.values, pop, cells);
    rec.population = total_population(pop, cells);
    rec.cell_count = cells.size();
    out.records.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Urbanization strata

inline constexpr std::array<std::string_view, 7> kUrbanizationNames = {
    "very low density rural",    "low density rural",   "rural cluster", "suburban or peri-urban",
    "semi-dense urban cluster", "dense urban cluster", "urban center"};

struct StratumSummary {
  int urban_class = 0;  // 1..7
  std::size_t cell_count = 0;
  double population = 0.0;
  std::optional<double> pw_mean;
  std::optional<double> pop_share;
  std::array<double, 10> pop_by_decile{};
};

/// Splits cells by urbanization class (1..7). Cells with nodata class or
/// population are left out. Population shares are relative to the total over
/// the classified cells.
inline std::array<StratumSummary, 7> stratify_by_urbanization(const RasterLayer& field, const DecileField& dec,
                                                              const RasterLayer& pop, const RasterLayer& urb,
                                                              const GridSpec& grid) {
  require_same_grid(urb.grid(), grid, "urbanization raster");
  require_same_grid(pop.grid(), grid, "population raster");
  std::array<StratumSummary, 7> out{};
  std::array<double, 7> num{}, den{};
  for (int k = 0; k < 7; ++k) out[k].urban_class = k + 1;
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (urb.is_nodata(i) || pop.is_nodata(i)) continue;
    const double u = urb[i];
    if (!(u >= 1.0 && u <= 7.0) || std::floor(u) != u)
      throw Error(ErrorClass::data, "urbanization class outside 1..7 at cell " + std::to_string(i));
    auto& s = out[static_cast<std::size_t>(u) - 1];
    const double p = pop[i];
    ++s.cell_count;
    s.population += p;
    total += p;
    if (!field.is_nodata(i)) {
      num[static_cast<std::size_t>(u) - 1] += field[i] * p;
      den[static_cast<std::size_t>(u) - 1] += p;
    }
    if (!dec.labels.is_nodata(i)) {
      const double d = dec.labels[i];
      if (d >= 1.0 && d <= 10.0) s.pop_by_decile[static_cast<std::size_t>(d) - 1] += p;
    }
  }
  for (std::size_t k = 0; k < 7; ++k) {
    if (den[k] > 0.0) out[k].pw_mean = num[k] / den[k];
    if (total > 0.0) out[k].pop_share = out[k].population / total;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation

using CorrMatrix = std::vector<std::vector<std::optional<double>>>;

namespace detail {
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 3) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline bool is_constant(std::span<const std::optional<double>> col) {
  std::optional<double> first;
  for (const auto& v : col) {
    if (!v) continue;
    if (!first) first = v;
    else if (*v != *first) return false;
  }
  return true;
}
}  // namespace detail

/// Pearson correlations between columns of `data` (one row per record, one
/// column per variable) with pairwise deletion. A constant variable gets an
/// all-missing row and column.
inline CorrMatrix corr_matrix(const std::vector<std::vector<std::optional<double>>>& data) {
  if (data.size() < 3) throw InsufficientData("correlation needs at least 3 records");
  const std::size_t nv = data.front().size();
  for (const auto& row : data)
    if (row.size() != nv) throw Error(ErrorClass::data, "ragged correlation input");
  std::vector<bool> constant(nv);
  for (std::size_t j = 0; j < nv; ++j) {
    std::vector<std::optional<double>> col;
    for (const auto& row : data) col.push_back(row[j]);
    constant[j] = detail::is_constant(col);
  }
  CorrMatrix m(nv, std::vector<std::optional<double>>(nv));
  for (std::size_t a = 0; a < nv; ++a) {
    if (constant[a]) continue;
    m[a][a] = 1.0;
    for (std::size_t b = a + 1; b < nv; ++b) {
      if (constant[b]) continue;
      std::vector<double> x, y;
      for (const auto& row : data)
        if (row[a] && row[b]) {
          x.push_back(*row[a]);
          y.push_back(*row[b]);
        }
      m[a][b] = m[b][a] = detail::pearson(x, y);
    }
  }
  return m;
}

/// Rows of (component pw-means..., index pw-mean) for corr_matrix.
inline std::vector<std::vector<std::optional<double>>> correlation_rows(std::span<const AggregateRecord> records) {
  std::vector<std::vector<std::optional<double>>> rows;
  for (const auto& r : records) {
    std::vector<std::optional<double>> row(r.component_means.begin(), r.component_means.end());
    row.push_back(r.index_pw_mean);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Population distributions

struct CdfPoint {
  double value;
  double cum_pop_share;
};

/// Cumulative population share by field value; equal values share a point.
inline std::optional<std::vector<CdfPoint>> pop_weighted_cdf(const RasterLayer& field, const RasterLayer& pop,
                                                             std::span<const CellId> cells) {
  std::vector<std::pair<double, double>> vp;
  for (auto c : cells)
    if (!field.is_nodata(c) && !pop.is_nodata(c)) vp.emplace_back(field.at(c), pop.at(c));
  std::sort(vp.begin(), vp.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double total = 0.0;
  for (const auto& [v, p] : vp) total += p;
  if (!(total > 0.0)) return std::nullopt;
  std::vector<CdfPoint> out;
  double running = 0.0;
  for (std::size_t i = 0; i < vp.size(); ++i) {
    running += vp[i].second;
    if (i + 1 < vp.size() && vp[i + 1].first == vp[i].first) continue;
    out.push_back({vp[i].first, running / total});
  }
  out.back().cum_pop_share = 1.0;
  return out;
}

/// Percent of population living in cells with decile below `threshold`.
inline std::optional<double> pct_below_decile(const DecileField& dec, const RasterLayer& pop,
                                              std::span<const CellId> cells, int threshold = 6) {
  if (threshold < 1 || threshold > 10) throw ConfigError("decile threshold must be in 1..10");
  double below = 0.0, total = 0.0;
  for (auto c : cells) {
    if (dec.labels.is_nodata(c) || pop.is_nodata(c)) continue;
    total += pop.at(c);
    if (dec.labels.at(c) < threshold) below += pop.at(c);
  }
  if (!(total > 0.0)) return std::nullopt;
  return 100.0 * below / total;
}

inline std::vector<CellId> all_cells(const GridSpec& g) {
  std::vector<CellId> out;
  out.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back(g.cell(i));
  return out;
}

// ---------------------------------------------------------------------------
// Moran's I

/// Binary symmetric contiguity among a fixed set of cells.
struct SpatialWeights {
  std::vector<CellId> cells;                       // sorted
  std::vector<std::vector<std::size_t>> neighbors;  // positions into `cells`
  double total_weight = 0.0;
};

namespace detail {
inline SpatialWeights contiguity_weights(std::vector<CellId> cells, const GridSpec& grid, Contiguity scheme) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  SpatialWeights w;
  w.neighbors.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (auto n : contiguity_neighbors(cells[i], grid, scheme)) {
      auto it = std::lower_bound(cells.begin(), cells.end(), n);
      if (it != cells.end() && *it == n) w.neighbors[i].push_back(static_cast<std::size_t>(it - cells.begin()));
    }
    w.total_weight += static_cast<double>(w.neighbors[i].size());
  }
  w.cells = std::move(cells);
  return w;
}
}  // namespace detail

inline SpatialWeights build_spatial_weights(std::span<const CellId> cells, const GridSpec& grid,
                                            Contiguity scheme = Contiguity::queen) {
  if (cells.empty()) throw InsufficientData("spatial weights need at least one cell");
  auto w = detail::contiguity_weights({cells.begin(), cells.end()}, grid, scheme);
  if (!(w.total_weight > 0.0)) throw DegenerateWeights("no adjacent cell pairs: total weight is 0");
  return w;
}

struct MoranResult {
  double I = 0.0;
  std::size_t N = 0;
  double W = 0.0;
};

/// Global Moran's I. Nodata cells and their links are dropped first.
inline MoranResult morans_i(const RasterLayer& field, const SpatialWeights& weights) {
  std::vector<std::size_t> keep_pos(weights.cells.size(), SIZE_MAX);
  std::vector<double> x;
  for (std::size_t i = 0; i < weights.cells.size(); ++i) {
    if (field.is_nodata(weights.cells[i])) continue;
    keep_pos[i] = x.size();
    x.push_back(field.at(weights.cells[i]));
  }
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientData("Moran's I needs at least 2 cells with values");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> dev(n);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dev[i] = x[i] - mean;
    denom += dev[i] * dev[i];
  }
  // Summation leaves a constant field with ulp-sized deviations; judge the
  // spread relative to the mean, as the z-score does.
  const double sd = std::sqrt(denom / static_cast<double>(n));
  if (!(sd > 1e-12 * std::abs(mean))) throw DegenerateField("Moran's I undefined for a constant field");
  double num = 0.0;
  double total_w = 0.0;
  for (std::size_t i = 0; i < weights.cells.size(); ++i) {
    if (keep_pos[i] == SIZE_MAX) continue;
    for (auto j : weights.neighbors[i]) {
      if (keep_pos[j] == SIZE_MAX) continue;
      num += dev[keep_pos[i]] * dev[keep_pos[j]];
      total_w += 1.0;
    }
  }
  if (!(total_w > 0.0)) throw DegenerateWeights("no adjacent pairs left after dropping nodata cells");
  return {static_cast<double>(n) / total_w * (num / denom), n, total_w};
}

}  // namespace walkidx
