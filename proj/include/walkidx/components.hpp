#pragma once

// Raster, point and polygon derived walkability components: NDVI, green
// space share, slope, transit stops, land-use mix and per-capita variants.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "walkidx/error.hpp"
#include "walkidx/fields.hpp"
#include "walkidx/grid.hpp"
#include "walkidx/io.hpp"
#include "walkidx/parallel.hpp"
#include "walkidx/raster.hpp"

namespace walkidx {

/// Mean of the non-nodata fine pixels under each grid cell.
inline ComponentField ndvi_field(const RasterLayer& fine, const GridSpec& grid) {
  const std::int64_t f = refinement_factor(fine.grid(), grid);
  ComponentField out{ComponentKind::NDVI, RasterLayer(grid)};
  for (std::int64_t r = 0; r < grid.n_rows(); ++r)
    for (std::int64_t c = 0; c < grid.n_cols(); ++c) {
      double sum = 0.0;
      std::int64_t n = 0;
      for (std::int64_t fr = r * f; fr < (r + 1) * f; ++fr)
        for (std::int64_t fc = c * f; fc < (c + 1) * f; ++fc) {
          const CellId px{fr, fc};
          if (fine.is_nodata(px)) continue;
          sum += fine.at(px);
          ++n;
        }
      if (n > 0) out.values.at({r, c}) = sum / static_cast<double>(n);
    }
  return out;
}

/// Share of each cell covered by the union of the polygons, estimated on a
/// supersample x supersample lattice of sample points per cell.
inline ComponentField green_fraction_field(std::span<const PolygonGeometry> polys, const GridSpec& grid,
                                           int supersample = 10, unsigned threads = 1) {
  if (supersample < 1) throw ConfigError("gs.supersample must be >= 1");
  for (const auto& p : polys) validate_polygon(p, "green polygon " + p.id() + ": ");

  // Candidate polygons per cell from bounding boxes.
  std::vector<std::vector<std::uint32_t>> candidates(grid.size());
  const double s = grid.cell_size();
  for (std::size_t k = 0; k < polys.size(); ++k) {
    const BoundingBox b = bounds(polys[k]);
    const auto c0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((b.min_x - grid.origin_x()) / s)));
    const auto c1 = std::min<std::int64_t>(grid.n_cols() - 1, static_cast<std::int64_t>(std::floor((b.max_x - grid.origin_x()) / s)));
    const auto r0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((b.min_y - grid.origin_y()) / s)));
    const auto r1 = std::min<std::int64_t>(grid.n_rows() - 1, static_cast<std::int64_t>(std::floor((b.max_y - grid.origin_y()) / s)));
    for (auto r = r0; r <= r1; ++r)
      for (auto c = c0; c <= c1; ++c) candidates[grid.index({r, c})].push_back(static_cast<std::uint32_t>(k));
  }

  ComponentField out{ComponentKind::GS, RasterLayer(grid, 0.0)};
  const double step = s / supersample;
  const int total = supersample * supersample;
  parallel_for(grid.size(), threads, [&](std::size_t i, unsigned) {
    const auto& cand = candidates[i];
    if (cand.empty()) return;
    const CellId cell = grid.cell(i);
    const double x0 = grid.origin_x() + static_cast<double>(cell.col) * s;
    const double y0 = grid.origin_y() + static_cast<double>(cell.row) * s;
    int covered = 0;
    for (int a = 0; a < supersample; ++a)
      for (int b = 0; b < supersample; ++b) {
        const Point sample{x0 + (b + 0.5) * step, y0 + (a + 0.5) * step};
        for (auto k : cand)
          if (point_in_polygon(sample, polys[k])) {
            ++covered;
            break;
          }
      }
    out.values[i] = static_cast<double>(covered) / total;
  });
  return out;
}

/// Horn's 3x3 slope in degrees for every DEM pixel. Border pixels replicate
/// their edge; nodata neighbours take the centre value; nodata centres stay
/// nodata.
inline RasterLayer horn_slope(const RasterLayer& dem) {
  const GridSpec& g = dem.grid();
  RasterLayer out(g, dem.nodata(), dem.nodata());
  const double s = g.cell_size();
  const std::int64_t nr = g.n_rows(), nc = g.n_cols();
  for (std::int64_t r = 0; r < nr; ++r)
    for (std::int64_t c = 0; c < nc; ++c) {
      if (dem.is_nodata(CellId{r, c})) continue;
      const double centre = dem.at({r, c});
      auto z = [&](std::int64_t dr, std::int64_t dc) {
        const CellId n{std::clamp<std::int64_t>(r + dr, 0, nr - 1), std::clamp<std::int64_t>(c + dc, 0, nc - 1)};
        return dem.is_nodata(n) ? centre : dem.at(n);
      };
      // dr = +1 is north.
      const double dzdx = ((z(1, 1) + 2 * z(0, 1) + z(-1, 1)) - (z(1, -1) + 2 * z(0, -1) + z(-1, -1))) / (8 * s);
      const double dzdy = ((z(1, -1) + 2 * z(1, 0) + z(1, 1)) - (z(-1, -1) + 2 * z(-1, 0) + z(-1, 1))) / (8 * s);
      out.at({r, c}) = std::atan(std::hypot(dzdx, dzdy)) * 180.0 / std::numbers::pi;
    }
  return out;
}

/// Mean Horn slope of the DEM pixels inside each grid cell.
inline ComponentField slope_field(const RasterLayer& dem, const GridSpec& grid) {
  const std::int64_t f = refinement_factor(dem.grid(), grid);
  const RasterLayer pixel_slope = horn_slope(dem);
  ComponentField out{ComponentKind::SLOPE, RasterLayer(grid)};
  for (std::int64_t r = 0; r < grid.n_rows(); ++r)
    for (std::int64_t c = 0; c < grid.n_cols(); ++c) {
      double sum = 0.0;
      std::int64_t n = 0;
      for (std::int64_t fr = r * f; fr < (r + 1) * f; ++fr)
        for (std::int64_t fc = c * f; fc < (c + 1) * f; ++fc) {
          if (pixel_slope.is_nodata(CellId{fr, fc})) continue;
          sum += pixel_slope.at({fr, fc});
          ++n;
        }
      if (n > 0) out.values.at({r, c}) = sum / static_cast<double>(n);
    }
  return out;
}

inline ComponentField pt_field(std::span<const PointRecord> stops, const GridSpec& grid) {
  ComponentField out{ComponentKind::PT, RasterLayer(grid, 0.0)};
  for (const auto& s : stops)
    if (auto c = cell_of_point(s.location, grid)) out.values.at(*c) += 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Land-use mix

/// Remapped CORINE land-use classes 1..5; 0 is unclassified.
enum class LandUseClass : std::uint8_t {
  unclassified = 0,
  urban_fabric = 1,
  industrial_commercial_transport = 2,
  green_urban = 3,
  sports_leisure = 4,
  agricultural_natural = 5,
};

inline constexpr LandUseClass remap_corine(std::int64_t code) {
  if (code >= 111 && code <= 112) return LandUseClass::urban_fabric;
  if (code >= 121 && code <= 124) return LandUseClass::industrial_commercial_transport;
  if (code == 141) return LandUseClass::green_urban;
  if (code == 142) return LandUseClass::sports_leisure;
  if ((code >= 211 && code <= 244) || (code >= 311 && code <= 324) || code == 333 ||
      (code >= 511 && code <= 512))
    return LandUseClass::agricultural_natural;
  return LandUseClass::unclassified;
}

/// Shannon entropy (natural log) of class counts; nullopt when all are zero.
inline std::optional<double> class_entropy(std::span<const std::int64_t> counts) {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return std::nullopt;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double q = static_cast<double>(c) / static_cast<double>(total);
    h -= q * std::log(q);
  }
  return h == 0.0 ? 0.0 : h;  // no negative zero
}

/// Land-use entropy over the (2r+1)^2 window around each cell, clipped at
/// the grid border.
inline ComponentField lum_field(const RasterLayer& corine, const GridSpec& grid, int window_radius = 2) {
  if (window_radius < 0) throw ConfigError("lum.window_radius must be >= 0");
  require_same_grid(corine.grid(), grid, "CORINE raster");
  const std::int64_t nr = grid.n_rows(), nc = grid.n_cols();
  // Per-class summed-area tables with a zero border row/column.
  const std::size_t stride = static_cast<std::size_t>(nc + 1);
  std::array<std::vector<std::int64_t>, 5> sat;
  for (auto& t : sat) t.assign(static_cast<std::size_t>(nr + 1) * stride, 0);
  for (std::int64_t r = 0; r < nr; ++r)
    for (std::int64_t c = 0; c < nc; ++c) {
      int cls = 0;
      if (!corine.is_nodata(CellId{r, c})) {
        const double v = corine.at({r, c});
        if (std::floor(v) == v) cls = static_cast<int>(remap_corine(static_cast<std::int64_t>(v)));
      }
      for (int k = 0; k < 5; ++k) {
        const auto i = static_cast<std::size_t>(r + 1) * stride + static_cast<std::size_t>(c + 1);
        sat[k][i] = (cls == k + 1) + sat[k][i - 1] + sat[k][i - stride] - sat[k][i - stride - 1];
      }
    }
  ComponentField out{ComponentKind::LUM, RasterLayer(grid)};
  for (std::int64_t r = 0; r < nr; ++r)
    for (std::int64_t c = 0; c < nc; ++c) {
      const auto r0 = static_cast<std::size_t>(std::max<std::int64_t>(0, r - window_radius));
      const auto r1 = static_cast<std::size_t>(std::min<std::int64_t>(nr, r + window_radius + 1));
      const auto c0 = static_cast<std::size_t>(std::max<std::int64_t>(0, c - window_radius));
      const auto c1 = static_cast<std::size_t>(std::min<std::int64_t>(nc, c + window_radius + 1));
      std::array<std::int64_t, 5> counts{};
      for (int k = 0; k < 5; ++k)
        counts[k] = sat[k][r1 * stride + c1] - sat[k][r0 * stride + c1] - sat[k][r1 * stride + c0] +
                    sat[k][r0 * stride + c0];
      if (auto h = class_entropy(counts)) out.values.at({r, c}) = *h;
    }
  return out;
}

/// value / max(population, 1). Only defined for SWL, SI, GS and PT.
inline ComponentField per_capita(const ComponentField& field, const RasterLayer& pop) {
  switch (field.kind) {
    case ComponentKind::SWL:
    case ComponentKind::SI:
    case ComponentKind::GS:
    case ComponentKind::PT: break;
    default:
      throw UnsupportedKind("per-capita is not defined for " + std::string(to_string(field.kind)));
  }
  require_same_grid(field.grid(), pop.grid(), "population raster");
  ComponentField out{field.kind, RasterLayer(field.grid())};
  for (std::size_t i = 0; i < field.grid().size(); ++i) {
    if (field.values.is_nodata(i) || pop.is_nodata(i)) continue;
    out.values[i] = field.values[i] / std::max(pop[i], 1.0);
  }
  return out;
}

}  // namespace walkidx
