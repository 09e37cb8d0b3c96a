#pragma once

// Distance-decay smoothing over network catchments, z-score standardization,
// weighted index composition and decile labelling.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "walkidx/error.hpp"
#include "walkidx/fields.hpp"
#include "walkidx/parallel.hpp"
#include "walkidx/pednet.hpp"
#include "walkidx/raster.hpp"

namespace walkidx {

struct DecayParams {
  /// Gaussian spread in metres; the default is half of the 1275 m walk.
  double sigma_m = 637.5;

  void validate() const {
    if (!(sigma_m > 0.0) || !std::isfinite(sigma_m)) throw ConfigError("decay.sigma_m must be > 0");
  }
};

inline double gaussian_weight(double distance_m, const DecayParams& p) {
  return std::exp(-(distance_m * distance_m) / (2.0 * p.sigma_m * p.sigma_m));
}

/// Decay-weighted mean of `raw` over one catchment. Nodata contributors are
/// skipped; nullopt if none remain.
inline std::optional<double> smooth_at(const RasterLayer& raw, const IsochroneResult& iso,
                                       const DecayParams& p) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& rc : iso.reached) {
    if (raw.is_nodata(rc.cell)) continue;
    const double w = gaussian_weight(rc.distance, p);
    num += w * raw.at(rc.cell);
    den += w;
  }
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

/// Smooths one component given precomputed isochrones (one per target cell,
/// any order). Cells without an isochrone are nodata.
inline SmoothedField smooth_component(const ComponentField& raw, std::span<const IsochroneResult> isochrones,
                                      const DecayParams& params, unsigned threads = 1) {
  params.validate();
  SmoothedField out{raw.kind, RasterLayer(raw.grid())};
  parallel_for(isochrones.size(), threads, [&](std::size_t i, unsigned) {
    const auto& iso = isochrones[i];
    if (auto v = smooth_at(raw.values, iso, params)) out.values.at(iso.origin) = *v;
  });
  return out;
}

/// Smooths several components at once, computing each cell's isochrone a
/// single time and discarding it afterwards.
inline std::vector<SmoothedField> smooth_components(std::span<const ComponentField> raws,
                                                    const IsochroneEngine& engine,
                                                    const DecayParams& params, unsigned threads = 1) {
  params.validate();
  const GridSpec& grid = engine.grid();
  std::vector<SmoothedField> out;
  out.reserve(raws.size());
  for (const auto& r : raws) {
    require_same_grid(r.grid(), grid, "component raster");
    out.push_back({r.kind, RasterLayer(grid)});
  }
  std::vector<IsochroneEngine::Workspace> ws(std::max(1u, threads));
  parallel_for(grid.size(), threads, [&](std::size_t i, unsigned w) {
    const IsochroneResult iso = engine.compute(grid.cell(i), ws[w]);
    for (std::size_t k = 0; k < raws.size(); ++k)
      if (auto v = smooth_at(raws[k].values, iso, params)) out[k].values[i] = *v;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

struct NormStats {
  ComponentKind kind;
  double mean = 0.0;
  double std = 0.0;
  bool degenerate = false;  // set when a constant field was mapped to zeros
};

/// Optional study-domain restriction; cells outside it are nodata in the
/// z-field and do not enter the statistics.
using DomainMask = std::optional<std::vector<bool>>;

namespace detail {

inline std::vector<std::size_t> domain_cells(const RasterLayer& values, const DomainMask& domain) {
  if (domain && domain->size() != values.grid().size())
    throw AlignmentError("domain mask does not match the grid");
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < values.grid().size(); ++i)
    if (!values.is_nodata(i) && (!domain || (*domain)[i])) cells.push_back(i);
  return cells;
}

}  // namespace detail

/// Population mean and standard deviation over the usable cells.
inline NormStats norm_stats(const SmoothedField& field, const DomainMask& domain = std::nullopt) {
  const auto cells = detail::domain_cells(field.values, domain);
  if (cells.size() < 2)
    throw InsufficientData(std::string(to_string(field.kind)) + ": fewer than 2 cells to standardize");
  double sum = 0.0;
  for (auto i : cells) sum += field.values[i];
  const double mean = sum / static_cast<double>(cells.size());
  double ss = 0.0;
  for (auto i : cells) {
    const double d = field.values[i] - mean;
    ss += d * d;
  }
  return {field.kind, mean, std::sqrt(ss / static_cast<double>(cells.size())), false};
}

/// A standard deviation this small relative to the mean is rounding noise
/// around a constant.
inline bool is_degenerate(const NormStats& s) {
  return !(s.std > 0.0) || s.std <= 1e-12 * std::abs(s.mean);
}

inline std::pair<ZScoreField, NormStats> zscore(const SmoothedField& field,
                                                const DomainMask& domain = std::nullopt) {
  const NormStats stats = norm_stats(field, domain);
  if (is_degenerate(stats))
    throw DegenerateField(std::string(to_string(field.kind)) + ": constant field cannot be standardized");
  ZScoreField z{field.kind, RasterLayer(field.grid())};
  for (auto i : detail::domain_cells(field.values, domain))
    z.values[i] = (field.values[i] - stats.mean) / stats.std;
  return {std::move(z), stats};
}

/// Fallback for a constant component: zeros on the usable cells.
inline std::pair<ZScoreField, NormStats> zero_zscore(const SmoothedField& field,
                                                     const DomainMask& domain = std::nullopt) {
  NormStats stats = norm_stats(field, domain);
  stats.degenerate = true;
  ZScoreField z{field.kind, RasterLayer(field.grid())};
  for (auto i : detail::domain_cells(field.values, domain)) z.values[i] = 0.0;
  return {std::move(z), stats};
}

// ---------------------------------------------------------------------------
// Index composition

struct IndexWeights {
  std::array<double, 8> w = {0.5, 0.5, 0.5, 0.5, -1.0, 1.0, 1.0, 1.0};  // kAllKinds order

  double operator[](ComponentKind k) const { return w[kind_index(k)]; }
  double& operator[](ComponentKind k) { return w[kind_index(k)]; }

  void validate() const {
    for (double v : w)
      if (!std::isfinite(v)) throw ConfigError("index weights must be finite");
    if ((*this)[ComponentKind::SLOPE] > 0.0) throw ConfigError("index.weights.SLOPE must be <= 0");
  }
};

inline IndexField compose_index(const std::map<ComponentKind, ZScoreField>& z, const IndexWeights& weights) {
  weights.validate();
  std::array<const ZScoreField*, 8> fields{};
  for (auto k : kAllKinds) {
    auto it = z.find(k);
    if (it == z.end()) throw ConfigError("missing z-field for " + std::string(to_string(k)));
    fields[kind_index(k)] = &it->second;
  }
  const GridSpec& grid = fields[0]->grid();
  for (auto* f : fields) require_same_grid(f->grid(), grid, "z-field");
  IndexField out{RasterLayer(grid)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    bool missing = false;
    for (auto k : kAllKinds) {
      const auto* f = fields[kind_index(k)];
      if (f->values.is_nodata(i)) {
        missing = true;
        break;
      }
      sum += weights[k] * f->values[i];
    }
    if (!missing) out.values[i] = sum;
  }
  return out;
}

/// Nearest-rank deciles with ties broken by (row, col).
inline DecileField deciles(const IndexField& index) {
  const RasterLayer& v = index.values;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < v.grid().size(); ++i)
    if (!v.is_nodata(i)) order.push_back(i);
  const std::size_t m = order.size();
  if (m < 10) throw InsufficientData("deciles need at least 10 cells with an index value");
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v[a] < v[b] || (v[a] == v[b] && a < b);
  });
  DecileField out{RasterLayer(v.grid())};
  for (std::size_t p = 0; p < m; ++p) {
    const std::size_t d = std::min<std::size_t>(10, p * 10 / m + 1);
    out.labels[order[p]] = static_cast<double>(d);
  }
  return out;
}

}  // namespace walkidx
