#pragma once

// Random fixtures shared by the unit and acceptance suites.

#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "support/oracles.hpp"
#include "walkidx/io.hpp"
#include "walkidx/pednet.hpp"

namespace scenes {

using namespace walkidx;

/// A street network with integer coordinates and axis-aligned polylines, so
/// every path length is an exactly representable integer.
struct RandomNetwork {
  std::vector<NodeRecord> nodes;
  std::vector<EdgeRecord> edges;
};

inline RandomNetwork random_network(std::mt19937_64& rng, const GridSpec& grid, std::size_t n_nodes,
                                    std::size_t n_edges) {
  // Offsets with integer norms keep snap distances exact for a node's own cell.
  static constexpr int kOffsets[][2] = {{0, 0}, {3, 4}, {-6, 8}, {5, -12}, {-8, -15}, {20, 21}, {0, 30}, {-24, 7}};
  std::uniform_int_distribution<std::int64_t> row(0, grid.n_rows() - 1), col(0, grid.n_cols() - 1);
  std::uniform_int_distribution<int> off(0, 7);
  std::set<std::pair<std::int64_t, std::int64_t>> used;
  RandomNetwork net;
  NodeId next_id = 100;
  while (net.nodes.size() < n_nodes) {
    const Point c = centroid({row(rng), col(rng)}, grid);
    const auto& o = kOffsets[off(rng)];
    const auto x = static_cast<std::int64_t>(c.x) + o[0], y = static_cast<std::int64_t>(c.y) + o[1];
    if (!used.emplace(x, y).second) continue;
    net.nodes.push_back({next_id, {static_cast<double>(x), static_cast<double>(y)}});
    next_id += 1 + static_cast<NodeId>(rng() % 3);  // ids need not be dense
  }
  std::uniform_int_distribution<std::size_t> pick(0, n_nodes - 1);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t k = 0; k < n_edges; ++k) {
    const auto& a = net.nodes[pick(rng)];
    // Mostly local links, with the occasional long one.
    const NodeRecord* b = nullptr;
    for (int tries = 0; tries < 20; ++tries) {
      const auto& cand = net.nodes[pick(rng)];
      const double d = std::abs(cand.location.x - a.location.x) + std::abs(cand.location.y - a.location.y);
      if (d < 450 || u(rng) < 0.05) {
        b = &cand;
        break;
      }
    }
    if (!b) continue;
    EdgeRecord e;
    e.u = a.id;
    e.v = b->id;
    e.self_loop = a.id == b->id;
    const Point p = a.location, q = b->location;
    if (e.self_loop) {
      e.polyline = {p, {p.x + 10, p.y}, {p.x + 10, p.y + 10}, {p.x, p.y + 10}, p};
    } else if (p.x == q.x || p.y == q.y) {
      e.polyline = {p, q};
    } else if (u(rng) < 0.5) {
      e.polyline = {p, {q.x, p.y}, q};
    } else {
      e.polyline = {p, {p.x, q.y}, q};
    }
    e.length = polyline_length(e.polyline);
    net.edges.push_back(e);
    if (u(rng) < 0.05) net.edges.push_back(e);  // exact duplicate row
  }
  return net;
}

/// Reached cells computed from an all-pairs matrix and exhaustive snapping.
inline std::vector<std::pair<CellId, double>> isochrone_oracle(const PedestrianGraph& g, const GridSpec& grid,
                                                               const std::vector<std::vector<double>>& dist,
                                                               CellId origin, const IsochroneParams& params) {
  std::vector<Point> pts(g.locations().begin(), g.locations().end());
  const double limit = params.budget_s * params.speed_mps;
  std::vector<std::pair<CellId, double>> out;
  const auto so = oracle::nearest(pts, centroid(origin, grid), params.snap_radius_m);
  if (!so) return {{origin, 0.0}};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CellId c = grid.cell(i);
    if (c == origin) {
      out.emplace_back(c, 0.0);
      continue;
    }
    const auto sc = oracle::nearest(pts, centroid(c, grid), params.snap_radius_m);
    if (!sc) continue;
    const double total = so->second + dist[so->first][sc->first] + sc->second;
    if (total <= limit) out.emplace_back(c, total);
  }
  return out;
}

inline std::vector<std::vector<double>> graph_all_pairs(const PedestrianGraph& g) {
  std::vector<std::tuple<std::size_t, std::size_t, double>> e;
  for (const auto& ge : g.edges()) e.emplace_back(ge.a, ge.b, ge.length);
  return oracle::all_pairs(g.node_count(), e);
}

/// Random isochrone for every cell: the origin at 0 plus a random subset of
/// cells within `reach` rows/cols, with random distances.
inline std::vector<IsochroneResult> random_isochrones(std::mt19937_64& rng, const GridSpec& grid, int reach,
                                                      double max_dist) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<IsochroneResult> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CellId o = grid.cell(i);
    IsochroneResult r{o, {}};
    for (std::int64_t dr = -reach; dr <= reach; ++dr)
      for (std::int64_t dc = -reach; dc <= reach; ++dc) {
        const CellId c{o.row + dr, o.col + dc};
        if (!grid.contains(c)) continue;
        if (c == o) r.reached.push_back({c, 0.0});
        else if (u(rng) < 0.6) r.reached.push_back({c, u(rng) * max_dist});
      }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace scenes
