#pragma once

// Regular neighborhood lattice: addressing, geometry, polygon membership and
// lattice contiguity. Row 0 is the southern row, column 0 the western one.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "walkidx/error.hpp"

namespace walkidx {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct CellId {
  std::int64_t row = 0;
  std::int64_t col = 0;

  friend bool operator==(const CellId&, const CellId&) = default;
  friend auto operator<=>(const CellId&, const CellId&) = default;
};

class GridSpec {
 public:
  GridSpec() = default;

  GridSpec(double origin_x, double origin_y, double cell_size, std::int64_t n_rows,
           std::int64_t n_cols)
      : origin_x_(origin_x),
        origin_y_(origin_y),
        cell_size_(cell_size),
        n_rows_(n_rows),
        n_cols_(n_cols) {
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y))
      throw ConfigError("grid origin must be finite");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
      throw ConfigError("grid cell_size must be positive");
    if (n_rows < 1 || n_cols < 1) throw ConfigError("grid needs at least one row and one column");
    constexpr auto limit = static_cast<std::int64_t>(std::numeric_limits<std::ptrdiff_t>::max() /
                                                     static_cast<std::ptrdiff_t>(sizeof(double)));
    if (n_rows > limit / n_cols) throw ConfigError("grid cell count exceeds addressable size");
  }

  double origin_x() const noexcept { return origin_x_; }
  double origin_y() const noexcept { return origin_y_; }
  double cell_size() const noexcept { return cell_size_; }
  std::int64_t n_rows() const noexcept { return n_rows_; }
  std::int64_t n_cols() const noexcept { return n_cols_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_rows_ * n_cols_); }

  double max_x() const noexcept { return origin_x_ + static_cast<double>(n_cols_) * cell_size_; }
  double max_y() const noexcept { return origin_y_ + static_cast<double>(n_rows_) * cell_size_; }

  bool contains(CellId c) const noexcept {
    return c.row >= 0 && c.row < n_rows_ && c.col >= 0 && c.col < n_cols_;
  }

  /// Row-major linear index, south row first.
  std::size_t index(CellId c) const noexcept {
    return static_cast<std::size_t>(c.row * n_cols_ + c.col);
  }
  CellId cell(std::size_t index) const noexcept {
    const auto i = static_cast<std::int64_t>(index);
    return {i / n_cols_, i % n_cols_};
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double cell_size_ = 100.0;
  std::int64_t n_rows_ = 1;
  std::int64_t n_cols_ = 1;
};

/// Same lattice up to floating noise in the header values.
inline bool same_lattice(const GridSpec& a, const GridSpec& b) {
  const double tol = 1e-9 * a.cell_size();
  return a.n_rows() == b.n_rows() && a.n_cols() == b.n_cols() &&
         std::abs(a.cell_size() - b.cell_size()) <= tol &&
         std::abs(a.origin_x() - b.origin_x()) <= tol &&
         std::abs(a.origin_y() - b.origin_y()) <= tol;
}

/// Cell whose half-open square [x0, x0+s) x [y0, y0+s) contains p.
inline std::optional<CellId> cell_of_point(Point p, const GridSpec& g) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
  const double fx = std::floor((p.x - g.origin_x()) / g.cell_size());
  const double fy = std::floor((p.y - g.origin_y()) / g.cell_size());
  if (fx < 0.0 || fy < 0.0 || fx >= static_cast<double>(g.n_cols()) ||
      fy >= static_cast<double>(g.n_rows()))
    return std::nullopt;
  return CellId{static_cast<std::int64_t>(fy), static_cast<std::int64_t>(fx)};
}

inline Point centroid(CellId c, const GridSpec& g) {
  return {g.origin_x() + (static_cast<double>(c.col) + 0.5) * g.cell_size(),
          g.origin_y() + (static_cast<double>(c.row) + 0.5) * g.cell_size()};
}

using Ring = std::vector<Point>;

struct PolygonGeometry {
  Ring outer_ring;
  std::vector<Ring> holes;
  std::map<std::string, std::string> properties;

  std::string id() const {
    auto it = properties.find("id");
    return it == properties.end() ? std::string{} : it->second;
  }
};

struct BoundingBox {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void extend(Point p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
};

inline BoundingBox bounds(const PolygonGeometry& poly) {
  BoundingBox b;
  for (const auto& p : poly.outer_ring) b.extend(p);
  return b;
}

inline std::size_t distinct_vertex_count(const Ring& ring) {
  std::vector<std::pair<double, double>> v;
  v.reserve(ring.size());
  for (const auto& p : ring) v.emplace_back(p.x, p.y);
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

/// Throws InvalidGeometry unless every ring is closed with >= 3 distinct vertices.
inline void validate_polygon(const PolygonGeometry& poly, const std::string& context = {}) {
  auto check = [&](const Ring& ring, const char* what) {
    if (ring.size() < 4 || distinct_vertex_count(ring) < 3)
      throw InvalidGeometry(context + std::string(what) + " ring has fewer than 3 distinct vertices");
    if (!(ring.front() == ring.back()))
      throw InvalidGeometry(context + std::string(what) + " ring is not closed");
  };
  check(poly.outer_ring, "outer");
  for (const auto& h : poly.holes) check(h, "hole");
}

namespace detail {
inline int ring_crossings(const Ring& ring, Point p) {
  int crossings = 0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point a = ring[i];
    const Point b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) ++crossings;
    }
  }
  return crossings;
}
}  // namespace detail

/// Even-odd test over the outer ring and all holes together.
inline bool point_in_polygon(Point p, const PolygonGeometry& poly) {
  int crossings = detail::ring_crossings(poly.outer_ring, p);
  for (const auto& h : poly.holes) crossings += detail::ring_crossings(h, p);
  return (crossings & 1) != 0;
}

/// Range of cell rows/cols whose centroids can fall inside [lo, hi].
struct CellWindow {
  std::int64_t row0 = 0, row1 = -1, col0 = 0, col1 = -1;  // inclusive
};

inline CellWindow centroid_window(const BoundingBox& b, const GridSpec& g) {
  const double s = g.cell_size();
  auto lo = [&](double v, double o, std::int64_t n) {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((v - o) / s - 0.5)), 0, n);
  };
  auto hi = [&](double v, double o, std::int64_t n) {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil((v - o) / s - 0.5)), -1,
                                    n - 1);
  };
  return {lo(b.min_y, g.origin_y(), g.n_rows()), hi(b.max_y, g.origin_y(), g.n_rows()),
          lo(b.min_x, g.origin_x(), g.n_cols()), hi(b.max_x, g.origin_x(), g.n_cols())};
}

/// Cells whose centroid lies inside the polygon, in (row, col) order.
inline std::vector<CellId> cells_in_polygon(const PolygonGeometry& poly, const GridSpec& g) {
  validate_polygon(poly);
  const CellWindow w = centroid_window(bounds(poly), g);
  std::vector<CellId> out;
  for (std::int64_t r = w.row0; r <= w.row1; ++r)
    for (std::int64_t c = w.col0; c <= w.col1; ++c) {
      const CellId id{r, c};
      if (point_in_polygon(centroid(id, g), poly)) out.push_back(id);
    }
  return out;
}

enum class Contiguity { rook, queen };

inline std::vector<CellId> contiguity_neighbors(CellId c, const GridSpec& g, Contiguity scheme) {
  std::vector<CellId> out;
  out.reserve(8);
  for (std::int64_t dr = -1; dr <= 1; ++dr)
    for (std::int64_t dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      if (scheme == Contiguity::rook && dr != 0 && dc != 0) continue;
      const CellId n{c.row + dr, c.col + dc};
      if (g.contains(n)) out.push_back(n);
    }
  return out;
}

inline Contiguity parse_contiguity(const std::string& s) {
  if (s == "rook") return Contiguity::rook;
  if (s == "queen") return Contiguity::queen;
  throw ConfigError("unknown contiguity scheme '" + s + "' (expected rook or queen)");
}

}  // namespace walkidx
