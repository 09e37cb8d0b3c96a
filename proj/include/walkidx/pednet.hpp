#pragma once

// Pedestrian street graph: construction, intersection counts, street length
// per cell, and time-budgeted network isochrones over the cell lattice.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "walkidx/error.hpp"
#include "walkidx/fields.hpp"
#include "walkidx/grid.hpp"
#include "walkidx/io.hpp"
#include "walkidx/parallel.hpp"
#include "walkidx/raster.hpp"

namespace walkidx {

inline constexpr double kEndpointTolerance = 1e-6;

struct GraphEdge {
  std::size_t a = 0;  // node indices
  std::size_t b = 0;
  std::vector<Point> polyline;
  double length = 0.0;
};

struct Incidence {
  std::size_t neighbor;
  std::size_t edge;
};

/// Undirected street graph, immutable after build_graph().
class PedestrianGraph {
 public:
  std::size_t node_count() const noexcept { return ids_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  NodeId id(std::size_t node) const { return ids_[node]; }
  Point location(std::size_t node) const { return locations_[node]; }
  std::span<const Point> locations() const noexcept { return locations_; }
  std::span<const GraphEdge> edges() const noexcept { return edges_; }

  std::span<const Incidence> incident(std::size_t node) const {
    return {incidence_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
  }
  /// Incident edge endpoints; a self-loop counts twice.
  std::size_t degree(std::size_t node) const { return offsets_[node + 1] - offsets_[node]; }

  double total_length() const {
    double s = 0.0;
    for (const auto& e : edges_) s += e.length;
    return s;
  }

 private:
  friend PedestrianGraph build_graph(const std::vector<NodeRecord>&, const std::vector<EdgeRecord>&);

  std::vector<NodeId> ids_;
  std::vector<Point> locations_;
  std::vector<GraphEdge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Incidence> incidence_;
};

/// Node table implied by edge geometry when no nodes file is supplied.
inline std::vector<NodeRecord> infer_nodes(const std::vector<EdgeRecord>& edges) {
  std::map<NodeId, Point> seen;
  std::size_t row = 0;
  for (const auto& e : edges) {
    ++row;
    if (e.polyline.empty())
      throw GraphError("edge " + std::to_string(row) + " has no geometry and no nodes file was given");
    for (auto [id, p] : {std::pair{e.u, e.polyline.front()}, std::pair{e.v, e.polyline.back()}}) {
      auto [it, inserted] = seen.emplace(id, p);
      if (!inserted && std::hypot(it->second.x - p.x, it->second.y - p.y) > kEndpointTolerance)
        throw GraphError("edge " + std::to_string(row) + ": node " + std::to_string(id) +
                         " has inconsistent coordinates across edges");
    }
  }
  std::vector<NodeRecord> out;
  out.reserve(seen.size());
  for (const auto& [id, p] : seen) out.push_back({id, p});
  return out;
}

inline PedestrianGraph build_graph(const std::vector<NodeRecord>& nodes,
                                   const std::vector<EdgeRecord>& edges) {
  PedestrianGraph g;
  std::vector<std::pair<NodeId, std::size_t>> order;
  order.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) order.emplace_back(nodes[i].id, i);
  std::sort(order.begin(), order.end());
  for (std::size_t i = 1; i < order.size(); ++i)
    if (order[i].first == order[i - 1].first)
      throw GraphError("duplicate node id " + std::to_string(order[i].first));
  g.ids_.reserve(nodes.size());
  for (const auto& [id, src] : order) {
    g.ids_.push_back(id);
    g.locations_.push_back(nodes[src].location);
  }
  auto lookup = [&](NodeId id) -> std::optional<std::size_t> {
    auto it = std::lower_bound(g.ids_.begin(), g.ids_.end(), id);
    if (it == g.ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - g.ids_.begin());
  };

  // Canonical orientation (a <= b) so that reversed duplicates compare equal.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> by_endpoints;
  std::size_t row = 0;
  for (const auto& rec : edges) {
    ++row;
    const std::string name = "edge " + std::to_string(row) + " (" + std::to_string(rec.u) + "-" +
                             std::to_string(rec.v) + ")";
    const auto a = lookup(rec.u);
    const auto b = lookup(rec.v);
    if (!a || !b) throw GraphError(name + " references an unknown node");
    GraphEdge e{*a, *b, rec.polyline, 0.0};
    const Point pa = g.locations_[*a];
    const Point pb = g.locations_[*b];
    if (e.polyline.empty()) {
      e.polyline = {pa, pb};
      e.length = rec.length.value_or(std::hypot(pb.x - pa.x, pb.y - pa.y));
    } else {
      const Point s = e.polyline.front();
      const Point t = e.polyline.back();
      if (std::hypot(s.x - pa.x, s.y - pa.y) > kEndpointTolerance ||
          std::hypot(t.x - pb.x, t.y - pb.y) > kEndpointTolerance)
        throw GraphError(name + ": polyline endpoints do not match node coordinates");
      e.length = polyline_length(e.polyline);
    }
    if (!(e.length > 0.0)) continue;
    if (e.a > e.b) {
      std::swap(e.a, e.b);
      std::reverse(e.polyline.begin(), e.polyline.end());
    }
    auto& bucket = by_endpoints[{e.a, e.b}];
    const bool duplicate = std::any_of(bucket.begin(), bucket.end(), [&](std::size_t k) {
      const auto& o = g.edges_[k];
      return o.length == e.length && o.polyline == e.polyline;
    });
    if (duplicate) continue;
    bucket.push_back(g.edges_.size());
    g.edges_.push_back(std::move(e));
  }

  std::vector<std::size_t> degree(g.ids_.size(), 0);
  for (const auto& e : g.edges_) {
    ++degree[e.a];
    ++degree[e.b];
  }
  g.offsets_.assign(g.ids_.size() + 1, 0);
  for (std::size_t i = 0; i < degree.size(); ++i) g.offsets_[i + 1] = g.offsets_[i] + degree[i];
  g.incidence_.resize(g.offsets_.back());
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (std::size_t k = 0; k < g.edges_.size(); ++k) {
    const auto& e = g.edges_[k];
    g.incidence_[fill[e.a]++] = {e.b, k};
    g.incidence_[fill[e.b]++] = {e.a, k};
  }
  return g;
}

/// Per cell, the number of nodes with degree >= 3 located in it.
inline ComponentField count_intersections(const PedestrianGraph& g, const GridSpec& grid) {
  ComponentField f{ComponentKind::SI, RasterLayer(grid, 0.0)};
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (g.degree(n) < 3) continue;
    if (auto c = cell_of_point(g.location(n), grid)) f.values.at(*c) += 1.0;
  }
  return f;
}

namespace detail {

/// Splits segment p->q at every grid line it crosses and calls
/// sink(cell, fraction_of_segment) for each in-extent piece. The cell of a
/// piece is the cell holding its midpoint, so pieces lying on a grid line go
/// to the cell on the half-open side.
template <class Sink>
void split_segment(Point p, Point q, const GridSpec& grid, Sink&& sink) {
  const double s = grid.cell_size();
  std::vector<double> cuts{0.0, 1.0};
  auto add_cuts = [&](double a, double b, double origin) {
    if (a == b) return;
    const double ua = (a - origin) / s;
    const double ub = (b - origin) / s;
    const double lo = std::min(ua, ub);
    const double hi = std::max(ua, ub);
    for (double k = std::floor(lo) + 1.0; k < hi; k += 1.0) {
      const double t = (k - ua) / (ub - ua);
      if (t > 0.0 && t < 1.0) cuts.push_back(t);
    }
  };
  add_cuts(p.x, q.x, grid.origin_x());
  add_cuts(p.y, q.y, grid.origin_y());
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double t0 = cuts[i - 1];
    const double t1 = cuts[i];
    if (t1 <= t0) continue;
    const double tm = 0.5 * (t0 + t1);
    const Point mid{p.x + tm * (q.x - p.x), p.y + tm * (q.y - p.y)};
    if (auto c = cell_of_point(mid, grid)) sink(*c, t1 - t0);
  }
}

}  // namespace detail

/// Street length per cell. Each edge contributes its length, distributed over
/// cells in proportion to the polyline fragments they contain.
inline ComponentField clip_walk_length(const PedestrianGraph& g, const GridSpec& grid) {
  ComponentField f{ComponentKind::SWL, RasterLayer(grid, 0.0)};
  for (const auto& e : g.edges()) {
    const double geometric = polyline_length(e.polyline);
    if (!(geometric > 0.0)) continue;
    const double scale = e.length / geometric;
    for (std::size_t i = 1; i < e.polyline.size(); ++i) {
      const Point p = e.polyline[i - 1];
      const Point q = e.polyline[i];
      const double seg = std::hypot(q.x - p.x, q.y - p.y);
      if (seg == 0.0) continue;
      detail::split_segment(p, q, grid, [&](CellId c, double frac) {
        f.values.at(c) += frac * seg * scale;
      });
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Isochrones

struct IsochroneParams {
  double budget_s = 900.0;
  double speed_mps = 5.1 / 3.6;
  double snap_radius_m = 100.0;

  double max_distance() const noexcept { return budget_s * speed_mps; }

  void validate() const {
    if (!(budget_s > 0.0) || !std::isfinite(budget_s)) throw ConfigError("iso.budget_s must be > 0");
    if (!(speed_mps > 0.0) || !std::isfinite(speed_mps)) throw ConfigError("iso.speed must be > 0");
    if (!(snap_radius_m >= 0.0) || !std::isfinite(snap_radius_m))
      throw ConfigError("iso.snap_radius_m must be >= 0");
  }
};

struct ReachedCell {
  CellId cell;
  double distance;
};

/// Cells reachable from `origin`, sorted by (row, col). The origin is
/// always present at distance 0.
struct IsochroneResult {
  CellId origin;
  std::vector<ReachedCell> reached;

  std::optional<double> distance(CellId c) const {
    auto it = std::lower_bound(reached.begin(), reached.end(), c,
                               [](const ReachedCell& r, CellId v) { return r.cell < v; });
    if (it == reached.end() || it->cell != c) return std::nullopt;
    return it->distance;
  }
};

/// Nearest-node lookup on a uniform bucket grid.
class NodeLocator {
 public:
  NodeLocator(std::span<const Point> points, double radius)
      : points_(points), radius_(radius), bucket_(std::max(radius, 1.0)) {
    for (std::size_t i = 0; i < points.size(); ++i) buckets_[key(bx(points[i].x), by(points[i].y))].push_back(i);
  }

  struct Hit {
    std::size_t node;
    double distance;
  };

  /// Nearest point within the radius; ties go to the lower index.
  std::optional<Hit> nearest(Point p) const {
    std::optional<Hit> best;
    const auto x0 = bx(p.x - radius_), x1 = bx(p.x + radius_);
    const auto y0 = by(p.y - radius_), y1 = by(p.y + radius_);
    for (auto x = x0; x <= x1; ++x)
      for (auto y = y0; y <= y1; ++y) {
        auto it = buckets_.find(key(x, y));
        if (it == buckets_.end()) continue;
        for (std::size_t i : it->second) {
          const double d = std::hypot(points_[i].x - p.x, points_[i].y - p.y);
          if (d > radius_) continue;
          if (!best || d < best->distance || (d == best->distance && i < best->node)) best = Hit{i, d};
        }
      }
    return best;
  }

 private:
  std::int64_t bx(double x) const { return static_cast<std::int64_t>(std::floor(x / bucket_)); }
  std::int64_t by(double y) const { return static_cast<std::int64_t>(std::floor(y / bucket_)); }
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^ (static_cast<std::uint64_t>(y) & 0xffffffffu);
  }

  std::span<const Point> points_;
  double radius_;
  double bucket_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

/// Per-origin isochrone computation over a fixed graph and grid. Cell
/// centroids are snapped to the graph once; each query then runs a
/// distance-bounded Dijkstra. Thread-safe for concurrent compute() calls as
/// long as every thread uses its own Workspace.
class IsochroneEngine {
 public:
  struct Workspace {
    std::vector<double> dist;
    std::vector<std::size_t> touched;
    std::vector<std::pair<double, std::size_t>> heap;
  };

  IsochroneEngine(const PedestrianGraph& graph, const GridSpec& grid, IsochroneParams params)
      : graph_(graph), grid_(grid), params_(params) {
    params_.validate();
    const NodeLocator locator(graph.locations(), params_.snap_radius_m);
    snap_node_.assign(grid.size(), kNone);
    snap_dist_.assign(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (auto hit = locator.nearest(centroid(grid.cell(i), grid))) {
        snap_node_[i] = hit->node;
        snap_dist_[i] = hit->distance;
      }
    }
    cell_offsets_.assign(graph.node_count() + 1, 0);
    for (auto n : snap_node_)
      if (n != kNone) ++cell_offsets_[n + 1];
    for (std::size_t n = 0; n < graph.node_count(); ++n) cell_offsets_[n + 1] += cell_offsets_[n];
    cells_by_node_.resize(cell_offsets_.back());
    std::vector<std::size_t> fill(cell_offsets_.begin(), cell_offsets_.end() - 1);
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (snap_node_[i] != kNone) cells_by_node_[fill[snap_node_[i]]++] = i;
  }

  const GridSpec& grid() const noexcept { return grid_; }
  const IsochroneParams& params() const noexcept { return params_; }
  const PedestrianGraph& graph() const noexcept { return graph_; }

  std::optional<std::size_t> snapped_node(CellId c) const {
    const auto n = snap_node_[grid_.index(c)];
    return n == kNone ? std::nullopt : std::optional<std::size_t>(n);
  }

  IsochroneResult compute(CellId origin, Workspace& ws) const {
    IsochroneResult result{origin, {}};
    const std::size_t oi = grid_.index(origin);
    const std::size_t source = snap_node_[oi];
    if (source == kNone) {
      result.reached.push_back({origin, 0.0});
      return result;
    }
    const double limit = params_.max_distance();
    const double snap_origin = snap_dist_[oi];
    if (ws.dist.size() != graph_.node_count())
      ws.dist.assign(graph_.node_count(), std::numeric_limits<double>::infinity());

    // Dijkstra from the snapped node, pruned at the remaining budget.
    auto cmp = [](const auto& l, const auto& r) { return l.first > r.first; };
    ws.heap.clear();
    ws.touched.clear();
    ws.dist[source] = 0.0;
    ws.touched.push_back(source);
    ws.heap.emplace_back(0.0, source);
    std::vector<std::pair<std::size_t, double>> reached_indices;
    while (!ws.heap.empty()) {
      std::pop_heap(ws.heap.begin(), ws.heap.end(), cmp);
      const auto [d, u] = ws.heap.back();
      ws.heap.pop_back();
      if (d > ws.dist[u]) continue;
      if (snap_origin + d > limit) break;
      for (std::size_t k = cell_offsets_[u]; k < cell_offsets_[u + 1]; ++k) {
        const std::size_t cell = cells_by_node_[k];
        const double total = snap_origin + d + snap_dist_[cell];
        if (total <= limit) reached_indices.emplace_back(cell, total);
      }
      for (const auto& inc : graph_.incident(u)) {
        const double nd = d + graph_.edges()[inc.edge].length;
        if (nd < ws.dist[inc.neighbor] && snap_origin + nd <= limit) {
          if (ws.dist[inc.neighbor] == std::numeric_limits<double>::infinity())
            ws.touched.push_back(inc.neighbor);
          ws.dist[inc.neighbor] = nd;
          ws.heap.emplace_back(nd, inc.neighbor);
          std::push_heap(ws.heap.begin(), ws.heap.end(), cmp);
        }
      }
    }
    for (auto n : ws.touched) ws.dist[n] = std::numeric_limits<double>::infinity();

    bool has_origin = false;
    for (auto& [cell, dist] : reached_indices)
      if (cell == oi) {
        dist = 0.0;
        has_origin = true;
      }
    if (!has_origin) reached_indices.emplace_back(oi, 0.0);
    std::sort(reached_indices.begin(), reached_indices.end());
    result.reached.reserve(reached_indices.size());
    for (const auto& [cell, dist] : reached_indices) result.reached.push_back({grid_.cell(cell), dist});
    return result;
  }

  IsochroneResult compute(CellId origin) const {
    Workspace ws;
    return compute(origin, ws);
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  const PedestrianGraph& graph_;
  GridSpec grid_;
  IsochroneParams params_;
  std::vector<std::size_t> snap_node_;
  std::vector<double> snap_dist_;
  std::vector<std::size_t> cell_offsets_;
  std::vector<std::size_t> cells_by_node_;
};

inline IsochroneResult isochrone(const PedestrianGraph& g, CellId origin_cell, const GridSpec& grid,
                                 const IsochroneParams& params = {}) {
  if (g.node_count() == 0) throw GraphError("isochrone on an empty graph");
  return IsochroneEngine(g, grid, params).compute(origin_cell);
}

/// Isochrones for every cell of the grid, in linear cell order.
inline std::vector<IsochroneResult> all_isochrones(const IsochroneEngine& engine, unsigned threads) {
  const GridSpec& grid = engine.grid();
  std::vector<IsochroneResult> out(grid.size());
  std::vector<IsochroneEngine::Workspace> ws(std::max(1u, threads));
  parallel_for(grid.size(), threads, [&](std::size_t i, unsigned w) {
    out[i] = engine.compute(grid.cell(i), ws[w]);
  });
  return out;
}

/// Catchment area |K(n)| * cell_size^2 for each cell with an isochrone;
/// other cells are nodata.
inline ComponentField iso_area_field(const GridSpec& grid, std::span<const IsochroneResult> isochrones) {
  ComponentField f{ComponentKind::ISO, RasterLayer(grid)};
  const double area = grid.cell_size() * grid.cell_size();
  for (const auto& iso : isochrones)
    f.values.at(iso.origin) = static_cast<double>(iso.reached.size()) * area;
  return f;
}

/// Streaming variant over every cell; avoids holding all isochrones at once.
inline ComponentField iso_area_field(const IsochroneEngine& engine, unsigned threads) {
  const GridSpec& grid = engine.grid();
  ComponentField f{ComponentKind::ISO, RasterLayer(grid)};
  const double area = grid.cell_size() * grid.cell_size();
  std::vector<IsochroneEngine::Workspace> ws(std::max(1u, threads));
  parallel_for(grid.size(), threads, [&](std::size_t i, unsigned w) {
    f.values[i] = static_cast<double>(engine.compute(grid.cell(i), ws[w]).reached.size()) * area;
  });
  return f;
}

}  // namespace walkidx
