#include <map>
#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "support/scenes.hpp"
#include "walkidx/pednet.hpp"

using namespace walkidx;

namespace {

EdgeRecord straight(NodeId u, NodeId v, Point a, Point b) {
  EdgeRecord e;
  e.u = u;
  e.v = v;
  e.polyline = {a, b};
  e.length = polyline_length(e.polyline);
  e.self_loop = u == v;
  return e;
}

}  // namespace

TEST(BuildGraph, PathDegreeSequence) {
  const std::vector<NodeRecord> nodes = {{1, {0, 0}}, {2, {100, 0}}, {3, {200, 0}}};
  const auto g = build_graph(nodes, {straight(1, 2, {0, 0}, {100, 0}), straight(2, 3, {100, 0}, {200, 0})});
  EXPECT_EQ(g.degree(0), 1u);
  EXPECT_EQ(g.degree(1), 2u);
  EXPECT_EQ(g.degree(2), 1u);
  EXPECT_EQ(g.total_length(), 200.0);
}

TEST(BuildGraph, DuplicateRowsCollapse) {
  const std::vector<NodeRecord> nodes = {{1, {0, 0}}, {2, {100, 0}}};
  const auto e = straight(1, 2, {0, 0}, {100, 0});
  const auto rev = straight(2, 1, {100, 0}, {0, 0});
  EXPECT_EQ(build_graph(nodes, {e, e, rev}).edge_count(), 1u);
  // Same endpoints, different geometry: a genuine parallel street.
  EdgeRecord bent = e;
  bent.polyline = {{0, 0}, {50, 30}, {100, 0}};
  bent.length = polyline_length(bent.polyline);
  EXPECT_EQ(build_graph(nodes, {e, bent}).edge_count(), 2u);
}

TEST(BuildGraph, EndpointMismatchNamesEdge) {
  const std::vector<NodeRecord> nodes = {{1, {0, 0}}, {2, {100, 0}}};
  try {
    build_graph(nodes, {straight(1, 2, {0, 0}, {105, 0})});
    FAIL();
  } catch (const GraphError& err) {
    EXPECT_NE(std::string(err.what()).find("edge 1"), std::string::npos);
  }
  EXPECT_THROW(build_graph(nodes, {straight(1, 9, {0, 0}, {100, 0})}), GraphError);
  EXPECT_THROW(build_graph({{1, {0, 0}}, {1, {5, 5}}}, {}), GraphError);
}

TEST(BuildGraph, SelfLoopCountsTwice) {
  const std::vector<NodeRecord> nodes = {{1, {0, 0}}, {2, {100, 0}}};
  EdgeRecord loop;
  loop.u = loop.v = 1;
  loop.self_loop = true;
  loop.polyline = {{0, 0}, {10, 0}, {10, 10}, {0, 0}};
  loop.length = polyline_length(loop.polyline);
  const auto g = build_graph(nodes, {loop, straight(1, 2, {0, 0}, {100, 0})});
  EXPECT_EQ(g.degree(0), 3u);
  const auto si = count_intersections(g, GridSpec(0, 0, 100, 1, 2));
  EXPECT_EQ(si.values.at({0, 0}), 1.0);
}

TEST(BuildGraph, LengthOnlyRowsUseStatedLength) {
  const std::vector<NodeRecord> nodes = {{1, {0, 50}}, {2, {150, 50}}};
  EdgeRecord e;
  e.u = 1;
  e.v = 2;
  e.length = 300.0;
  const auto g = build_graph(nodes, {e});
  EXPECT_EQ(g.edges()[0].length, 300.0);
  const auto swl = clip_walk_length(g, GridSpec(0, 0, 100, 1, 2));
  EXPECT_DOUBLE_EQ(swl.values.at({0, 0}), 200.0);
  EXPECT_DOUBLE_EQ(swl.values.at({0, 1}), 100.0);
}

TEST(InferNodes, FromGeometry) {
  const auto nodes = infer_nodes({straight(5, 7, {0, 0}, {3, 4}), straight(7, 9, {3, 4}, {9, 4})});
  ASSERT_EQ(nodes.size(), 3u);
  EXPECT_EQ(nodes[1].id, 7);
  EXPECT_EQ(nodes[1].location, (Point{3, 4}));
  EXPECT_THROW(infer_nodes({straight(5, 7, {0, 0}, {3, 4}), straight(7, 9, {3, 5}, {9, 4})}), GraphError);
}

TEST(CountIntersections, Examples) {
  const GridSpec grid(0, 0, 100, 3, 3);
  // Star with centre in (0,0) and three leaves elsewhere; plus a 4-way crossing in (2,2).
  std::vector<NodeRecord> nodes = {{1, {50, 50}},   {2, {150, 50}},  {3, {50, 150}},  {4, {150, 150}},
                                   {10, {250, 250}}, {11, {250, 290}}, {12, {250, 210}}, {13, {210, 250}},
                                   {14, {290, 250}}};
  std::vector<EdgeRecord> edges;
  for (NodeId leaf : {2, 3, 4}) edges.push_back(straight(1, leaf, nodes[0].location, nodes[leaf - 1].location));
  for (std::size_t k = 5; k < 9; ++k) edges.push_back(straight(10, nodes[k].id, nodes[4].location, nodes[k].location));
  const auto si = count_intersections(build_graph(nodes, edges), grid);
  EXPECT_EQ(si.values.at({0, 0}), 1.0);
  EXPECT_EQ(si.values.at({2, 2}), 1.0);
  double total = 0;
  for (double v : si.values.values()) total += v;
  EXPECT_EQ(total, 2.0);
}

TEST(CountIntersections, MatchesAdjacencyRecount) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const GridSpec grid(0, 0, 100, 12, 12);
    auto net = scenes::random_network(rng, grid, 120, 260);
    const auto g = build_graph(net.nodes, net.edges);
    // Recount degrees from a deduplicated copy of the input rows.
    std::map<NodeId, int> deg;
    std::vector<std::tuple<NodeId, NodeId, std::vector<Point>>> seen;
    for (auto e : net.edges) {
      if (e.u > e.v) {
        std::swap(e.u, e.v);
        std::reverse(e.polyline.begin(), e.polyline.end());
      }
      auto key = std::make_tuple(e.u, e.v, e.polyline);
      if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
      seen.push_back(key);
      ++deg[e.u];
      ++deg[e.v];
    }
    RasterLayer expected(grid, 0.0);
    for (const auto& n : net.nodes)
      if (deg[n.id] >= 3) {
        const auto r = static_cast<std::int64_t>(std::floor(n.location.y / 100.0));
        const auto c = static_cast<std::int64_t>(std::floor(n.location.x / 100.0));
        expected.at({r, c}) += 1.0;
      }
    EXPECT_EQ(count_intersections(g, grid).values, expected) << "trial " << trial;
  }
}

TEST(CountIntersections, InvariantUnderRecordOrder) {
  std::mt19937_64 rng(4);
  const GridSpec grid(0, 0, 100, 10, 10);
  auto net = scenes::random_network(rng, grid, 80, 160);
  const auto a = count_intersections(build_graph(net.nodes, net.edges), grid);
  std::shuffle(net.nodes.begin(), net.nodes.end(), rng);
  std::shuffle(net.edges.begin(), net.edges.end(), rng);
  EXPECT_EQ(count_intersections(build_graph(net.nodes, net.edges), grid).values, a.values);
}

TEST(ClipWalkLength, Examples) {
  const GridSpec grid(0, 0, 100, 2, 2);
  const std::vector<NodeRecord> nodes = {{1, {0, 50}}, {2, {150, 50}}, {3, {10, 110}}, {4, {60, 180}}};
  const auto g = build_graph(nodes, {straight(1, 2, {0, 50}, {150, 50}), straight(3, 4, {10, 110}, {60, 180})});
  const auto swl = clip_walk_length(g, grid);
  EXPECT_DOUBLE_EQ(swl.values.at({0, 0}), 100.0);
  EXPECT_DOUBLE_EQ(swl.values.at({0, 1}), 50.0);
  EXPECT_DOUBLE_EQ(swl.values.at({1, 0}), std::hypot(50.0, 70.0));
  EXPECT_EQ(swl.values.at({1, 1}), 0.0);
}

TEST(ClipWalkLength, EdgeOnGridLineGoesToHalfOpenSide) {
  const GridSpec grid(0, 0, 100, 2, 2);
  const auto g = build_graph({{1, {20, 100}}, {2, {80, 100}}}, {straight(1, 2, {20, 100}, {80, 100})});
  const auto swl = clip_walk_length(g, grid);
  EXPECT_EQ(swl.values.at({1, 0}), 60.0);
  EXPECT_EQ(swl.values.at({0, 0}), 0.0);
}

TEST(ClipWalkLength, ConservesLengthAndMatchesClipOracle) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  const GridSpec grid(1000, 2000, 100, 15, 20);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<NodeRecord> nodes;
    std::vector<EdgeRecord> edges;
    for (int k = 0; k < 60; ++k) {
      std::vector<Point> pl;
      const int n = 2 + static_cast<int>(u(rng) * 4);
      for (int i = 0; i < n; ++i) pl.push_back({1000 + u(rng) * 2000, 2000 + u(rng) * 1500});
      nodes.push_back({2 * k, pl.front()});
      nodes.push_back({2 * k + 1, pl.back()});
      EdgeRecord e;
      e.u = 2 * k;
      e.v = 2 * k + 1;
      e.polyline = pl;
      e.length = polyline_length(pl);
      edges.push_back(e);
    }
    const auto g = build_graph(nodes, edges);
    const auto swl = clip_walk_length(g, grid);
    double sum = 0;
    for (double v : swl.values.values()) sum += v;
    EXPECT_NEAR(sum, g.total_length(), 1e-9 * g.total_length());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const CellId c = grid.cell(i);
      const double x0 = 1000 + c.col * 100.0, y0 = 2000 + c.row * 100.0;
      double expected = 0;
      for (const auto& e : g.edges())
        for (std::size_t s = 1; s < e.polyline.size(); ++s)
          expected += oracle::clipped_length(e.polyline[s - 1], e.polyline[s], x0, y0, x0 + 100, y0 + 100);
      EXPECT_NEAR(swl.values[i], expected, 1e-9 * std::max(1.0, expected));
    }
  }
}

TEST(Isochrone, DefaultBudgetIs1275m) {
  EXPECT_NEAR(IsochroneParams{}.max_distance(), 1275.0, 1e-9);
}

TEST(Isochrone, PathExample) {
  const GridSpec grid(0, 0, 100, 1, 15);
  const std::vector<NodeRecord> nodes = {{1, {50, 50}}, {2, {150, 50}}, {3, {1450, 50}}};
  const auto g = build_graph(nodes, {straight(1, 2, {50, 50}, {150, 50}), straight(2, 3, {150, 50}, {1450, 50})});
  const auto iso = isochrone(g, {0, 0}, grid);
  EXPECT_EQ(iso.distance({0, 1}), 100.0);
  EXPECT_FALSE(iso.distance({0, 14}));
  EXPECT_EQ(iso.distance({0, 0}), 0.0);
}

TEST(Isochrone, NoNodeNearOrigin) {
  const GridSpec grid(0, 0, 100, 5, 5);
  const auto g = build_graph({{1, {450, 450}}, {2, {350, 450}}}, {straight(1, 2, {450, 450}, {350, 450})});
  const auto iso = isochrone(g, {0, 0}, grid);
  ASSERT_EQ(iso.reached.size(), 1u);
  EXPECT_EQ(iso.reached[0].cell, (CellId{0, 0}));
  EXPECT_EQ(iso.reached[0].distance, 0.0);
}

TEST(Isochrone, SnapTieGoesToLowerNode) {
  const GridSpec grid(0, 0, 100, 1, 1);
  const auto g = build_graph({{1, {60, 50}}, {2, {40, 50}}}, {straight(1, 2, {60, 50}, {40, 50})});
  const IsochroneEngine engine(g, grid, {});
  EXPECT_EQ(engine.snapped_node({0, 0}), 0u);
}

TEST(Isochrone, MatchesAllPairsOracleExactly) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const GridSpec grid(0, 0, 100, 16, 16);
    auto net = scenes::random_network(rng, grid, 60 + 10 * trial, 120 + 25 * trial);
    const auto g = build_graph(net.nodes, net.edges);
    const auto dist = scenes::graph_all_pairs(g);
    IsochroneParams params;
    params.budget_s = 300 + 100 * trial;
    const IsochroneEngine engine(g, grid, params);
    for (std::size_t i = 0; i < grid.size(); i += 7) {
      const CellId o = grid.cell(i);
      const auto got = engine.compute(o);
      const auto want = scenes::isochrone_oracle(g, grid, dist, o, params);
      ASSERT_EQ(got.reached.size(), want.size()) << "trial " << trial << " origin " << i;
      for (std::size_t k = 0; k < want.size(); ++k) {
        EXPECT_EQ(got.reached[k].cell, want[k].first);
        EXPECT_EQ(got.reached[k].distance, want[k].second);
      }
    }
  }
}

TEST(Isochrone, TriangleInequalityOnAllPairs) {
  std::mt19937_64 rng(2);
  const GridSpec grid(0, 0, 100, 12, 12);
  auto net = scenes::random_network(rng, grid, 150, 350);
  const auto g = build_graph(net.nodes, net.edges);
  const auto d = scenes::graph_all_pairs(g);
  std::uniform_int_distribution<std::size_t> pick(0, g.node_count() - 1);
  for (int k = 0; k < 2000; ++k) {
    const auto a = pick(rng), b = pick(rng), c = pick(rng);
    EXPECT_LE(d[a][c], d[a][b] + d[b][c]);
  }
}

TEST(Isochrone, MonotoneInBudgetAndSpeed) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const GridSpec grid(0, 0, 100, 14, 14);
    auto net = scenes::random_network(rng, grid, 100, 220);
    const auto g = build_graph(net.nodes, net.edges);
    IsochroneParams lo, hi;
    lo.budget_s = 100 + u(rng) * 800;
    hi.budget_s = lo.budget_s + u(rng) * 600;
    hi.speed_mps = lo.speed_mps * (1 + u(rng));
    const IsochroneEngine el(g, grid, lo), eh(g, grid, hi);
    const auto area_lo = iso_area_field(el, 1), area_hi = iso_area_field(eh, 1);
    for (std::size_t i = 0; i < grid.size(); i += 5) {
      const auto a = el.compute(grid.cell(i)), b = eh.compute(grid.cell(i));
      for (const auto& r : a.reached) EXPECT_TRUE(b.distance(r.cell)) << "trial " << trial;
      EXPECT_LE(area_lo.values[i], area_hi.values[i]);
    }
  }
}

TEST(IsoArea, Examples) {
  const GridSpec grid(0, 0, 100, 5, 5);
  IsochroneResult lone{{0, 0}, {{{0, 0}, 0.0}}};
  IsochroneResult thirteen{{2, 2}, {}};
  for (std::int64_t r = 0; r < 5; ++r)
    for (std::int64_t c = 0; c < 5; ++c)
      if (std::abs(r - 2) + std::abs(c - 2) <= 2) thirteen.reached.push_back({{r, c}, 1.0});
  ASSERT_EQ(thirteen.reached.size(), 13u);
  const std::vector<IsochroneResult> isos = {lone, thirteen};
  const auto f = iso_area_field(grid, isos);
  EXPECT_EQ(f.values.at({0, 0}), 10000.0);
  EXPECT_EQ(f.values.at({2, 2}), 130000.0);
  EXPECT_TRUE(f.values.is_nodata(CellId{4, 4}));
}

TEST(IsoArea, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(6);
  const GridSpec grid(0, 0, 100, 20, 20);
  auto net = scenes::random_network(rng, grid, 200, 450);
  const auto g = build_graph(net.nodes, net.edges);
  const IsochroneEngine engine(g, grid, {});
  const auto a = iso_area_field(engine, 1);
  EXPECT_EQ(iso_area_field(engine, 4).values, a.values);
  const auto all = all_isochrones(engine, 3);
  EXPECT_EQ(iso_area_field(grid, all).values, a.values);
}

TEST(IsochroneParams, Validation) {
  IsochroneParams p;
  p.budget_s = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.speed_mps = -1;
  EXPECT_THROW(p.validate(), ConfigError);
}
