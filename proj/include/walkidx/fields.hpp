#pragma once

// Typed per-cell fields flowing through the index pipeline.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "walkidx/error.hpp"
#include "walkidx/raster.hpp"

namespace walkidx {

enum class ComponentKind { SWL, SI, GS, NDVI, SLOPE, PT, LUM, ISO };

inline constexpr std::array<ComponentKind, 8> kAllKinds = {
    ComponentKind::SWL,   ComponentKind::SI, ComponentKind::GS,  ComponentKind::NDVI,
    ComponentKind::SLOPE, ComponentKind::PT, ComponentKind::LUM, ComponentKind::ISO};

inline constexpr std::string_view to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::SWL: return "SWL";
    case ComponentKind::SI: return "SI";
    case ComponentKind::GS: return "GS";
    case ComponentKind::NDVI: return "NDVI";
    case ComponentKind::SLOPE: return "SLOPE";
    case ComponentKind::PT: return "PT";
    case ComponentKind::LUM: return "LUM";
    case ComponentKind::ISO: return "ISO";
  }
  return "?";
}

inline std::optional<ComponentKind> parse_kind(std::string_view s) {
  for (auto k : kAllKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline constexpr std::size_t kind_index(ComponentKind k) { return static_cast<std::size_t>(k); }

/// Raw per-cell value of one component.
struct ComponentField {
  ComponentKind kind;
  RasterLayer values;

  const GridSpec& grid() const noexcept { return values.grid(); }
};

/// Distance-decay weighted average of a component over each cell's catchment.
struct SmoothedField {
  ComponentKind kind;
  RasterLayer values;

  const GridSpec& grid() const noexcept { return values.grid(); }
};

struct ZScoreField {
  ComponentKind kind;
  RasterLayer values;

  const GridSpec& grid() const noexcept { return values.grid(); }
};

struct IndexField {
  RasterLayer values;

  const GridSpec& grid() const noexcept { return values.grid(); }
};

/// Labels 1..10, or nodata.
struct DecileField {
  RasterLayer labels;

  const GridSpec& grid() const noexcept { return labels.grid(); }
};

/// Checks the per-kind value range on every non-nodata cell.
inline bool in_kind_range(ComponentKind k, double v) {
  constexpr double eps = 1e-12;
  auto is_count = [](double x) { return x >= 0.0 && std::floor(x) == x; };
  switch (k) {
    case ComponentKind::LUM: return v >= 0.0 && v <= std::log(5.0) + eps;
    case ComponentKind::GS: return v >= 0.0 && v <= 1.0;
    case ComponentKind::NDVI: return v >= -1.0 && v <= 1.0;
    case ComponentKind::SLOPE:
    case ComponentKind::SWL:
    case ComponentKind::ISO: return v >= 0.0;
    case ComponentKind::SI:
    case ComponentKind::PT: return is_count(v);
  }
  return false;
}

inline bool field_in_range(const ComponentField& f) {
  for (std::size_t i = 0; i < f.values.grid().size(); ++i)
    if (!f.values.is_nodata(i) && !in_kind_range(f.kind, f.values[i])) return false;
  return true;
}

}  // namespace walkidx
