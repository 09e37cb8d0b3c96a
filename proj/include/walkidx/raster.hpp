#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "walkidx/error.hpp"
#include "walkidx/grid.hpp"

namespace walkidx {

inline constexpr double kDefaultNodata = -9999.0;

/// Dense real-valued raster on a GridSpec, south row first in memory.
/// Missing cells hold the nodata sentinel, compared by exact bit pattern.
class RasterLayer {
 public:
  RasterLayer() = default;

  explicit RasterLayer(GridSpec grid, double fill = kDefaultNodata, double nodata = kDefaultNodata)
      : grid_(grid), values_(grid.size(), fill), nodata_(nodata) {}

  RasterLayer(GridSpec grid, std::vector<double> values, double nodata)
      : grid_(grid), values_(std::move(values)), nodata_(nodata) {
    if (values_.size() != grid_.size())
      throw Error(ErrorClass::data, "raster values do not match grid dimensions");
  }

  const GridSpec& grid() const noexcept { return grid_; }
  double nodata() const noexcept { return nodata_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double at(CellId c) const noexcept { return values_[grid_.index(c)]; }
  double& at(CellId c) noexcept { return values_[grid_.index(c)]; }

  bool is_nodata(std::size_t i) const noexcept {
    return std::bit_cast<std::uint64_t>(values_[i]) == std::bit_cast<std::uint64_t>(nodata_);
  }
  bool is_nodata(CellId c) const noexcept { return is_nodata(grid_.index(c)); }
  void set_nodata(std::size_t i) noexcept { values_[i] = nodata_; }

  /// Every non-sentinel value must be finite.
  bool valid() const noexcept {
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!is_nodata(i) && !std::isfinite(values_[i])) return false;
    return values_.size() == grid_.size();
  }

  friend bool operator==(const RasterLayer& a, const RasterLayer& b) {
    if (!(a.grid_ == b.grid_) || std::bit_cast<std::uint64_t>(a.nodata_) !=
                                     std::bit_cast<std::uint64_t>(b.nodata_))
      return false;
    for (std::size_t i = 0; i < a.values_.size(); ++i)
      if (std::bit_cast<std::uint64_t>(a.values_[i]) != std::bit_cast<std::uint64_t>(b.values_[i]))
        return false;
    return true;
  }

 private:
  GridSpec grid_;
  std::vector<double> values_;
  double nodata_ = kDefaultNodata;
};

/// Integer refinement factor of a fine raster nested inside `coarse`.
/// Throws AlignmentError unless the fine raster tiles `coarse` exactly.
inline std::int64_t refinement_factor(const GridSpec& fine, const GridSpec& coarse) {
  const double ratio = coarse.cell_size() / fine.cell_size();
  const auto factor = static_cast<std::int64_t>(std::llround(ratio));
  const double tol = 1e-9 * coarse.cell_size();
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio)
    throw AlignmentError("fine raster cell size does not divide the grid cell size");
  if (std::abs(fine.origin_x() - coarse.origin_x()) > tol ||
      std::abs(fine.origin_y() - coarse.origin_y()) > tol)
    throw AlignmentError("fine raster origin is not aligned with the grid origin");
  if (fine.n_rows() != coarse.n_rows() * factor || fine.n_cols() != coarse.n_cols() * factor)
    throw AlignmentError("fine raster extent does not match the grid extent");
  return factor;
}

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!same_lattice(a, b)) throw AlignmentError(std::string(what) + ": raster grids differ");
}

}  // namespace walkidx
