#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "walkidx/io.hpp"

using namespace walkidx;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("walkidx_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path put(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  fs::path dir_;
};

std::string header(int ncols, int nrows) {
  return "ncols " + std::to_string(ncols) + "\nnrows " + std::to_string(nrows) +
         "\nxllcorner 0\nyllcorner 0\ncellsize 100\nNODATA_value -9999\n";
}

template <class E>
E expect_throw_as(auto&& fn) {
  try {
    fn();
  } catch (const E& e) {
    return e;
  }
  ADD_FAILURE() << "expected exception";
  throw std::logic_error("unreachable");
}

}  // namespace

using AsciiGrid = TempDir;

TEST_F(AsciiGrid, NorthFirstFileOrder) {
  const auto layer = read_ascii_grid(put("a.asc", header(2, 2) + "1 2\n3 4\n"));
  EXPECT_EQ(layer.at({1, 0}), 1.0);
  EXPECT_EQ(layer.at({1, 1}), 2.0);
  EXPECT_EQ(layer.at({0, 0}), 3.0);
  EXPECT_EQ(layer.grid(), GridSpec(0, 0, 100, 2, 2));
}

TEST_F(AsciiGrid, NodataSentinel) {
  const auto layer = read_ascii_grid(put("a.asc", header(2, 1) + "-9999 5\n"));
  EXPECT_TRUE(layer.is_nodata(CellId{0, 0}));
  EXPECT_FALSE(layer.is_nodata(CellId{0, 1}));
}

TEST_F(AsciiGrid, ErrorsCarryLineNumbers) {
  auto e = expect_throw_as<ParseError>([&] { read_ascii_grid(put("a.asc", header(2, 2) + "1 2\n3\n")); });
  EXPECT_EQ(e.location(), 8u);
  e = expect_throw_as<ParseError>([&] { read_ascii_grid(put("b.asc", header(2, 2) + "1 x\n3 4\n")); });
  EXPECT_EQ(e.location(), 7u);
  e = expect_throw_as<ParseError>([&] { read_ascii_grid(put("c.asc", "ncols 2\nrows 2\n")); });
  EXPECT_EQ(e.location(), 2u);
  EXPECT_THROW(read_ascii_grid(put("d.asc", header(0, 2))), ParseError);
}

TEST_F(AsciiGrid, RoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1e3);
  const GridSpec g(-1234.5, 987.25, 100, 7, 11);
  RasterLayer l(g);
  for (std::size_t i = 0; i < g.size(); ++i) l[i] = i % 9 == 0 ? kDefaultNodata : n(rng);
  const auto p = dir_ / "rt.asc";
  write_ascii_grid(l, p);
  EXPECT_EQ(read_ascii_grid(p), l);
  // Writing the read-back layer reproduces the same bytes.
  EXPECT_EQ(ascii_grid_bytes(read_ascii_grid(p)), detail::read_file(p));
}

TEST_F(AsciiGrid, EmptyRasterRejectedBeforeWrite) {
  EXPECT_THROW(write_ascii_grid(RasterLayer(), dir_ / "empty.asc"), Error);
  EXPECT_FALSE(fs::exists(dir_ / "empty.asc"));
}

using PointsCsv = TempDir;

TEST_F(PointsCsv, Examples) {
  const auto pts = read_points_csv(put("p.csv", "x,y,category\n10,20,bus\n"));
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].location, (Point{10, 20}));
  EXPECT_EQ(pts[0].category, "bus");
  EXPECT_TRUE(read_points_csv(put("e.csv", "x,y,category\n")).empty());
  const auto e = expect_throw_as<ParseError>([&] { read_points_csv(put("b.csv", "x,y,category\n10,oops,bus\n")); });
  EXPECT_EQ(e.location(), 1u);
  EXPECT_THROW(read_points_csv(put("h.csv", "10,20,bus\n")), ParseError);
}

using EdgesCsv = TempDir;

TEST_F(EdgesCsv, GeometryLength) {
  const auto edges = read_edges_csv(put("e.csv", "u,v,geometry\n1,2,LINESTRING(0 0, 3 4)\n"));
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0].u, 1);
  EXPECT_EQ(edges[0].v, 2);
  EXPECT_EQ(edges[0].length, 5.0);
  EXPECT_FALSE(edges[0].self_loop);
}

TEST_F(EdgesCsv, SelfLoopRetainedAndFlagged) {
  const auto edges = read_edges_csv(put("e.csv", "u,v,geometry\n1,1,LINESTRING(0 0, 0 0)\n"));
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_TRUE(edges[0].self_loop);
}

TEST_F(EdgesCsv, DanglingReferenceWhenNodesAuthoritative) {
  const std::vector<NodeRecord> nodes = {{1, {0, 0}}, {2, {3, 4}}};
  const auto p = put("e.csv", "u,v,geometry\n1,3,LINESTRING(0 0, 3 4)\n");
  EXPECT_NO_THROW(read_edges_csv(p));
  EXPECT_THROW(read_edges_csv(p, &nodes), ParseError);
}

TEST_F(EdgesCsv, LengthTableAndBadRows) {
  const auto edges = read_edges_csv(put("l.csv", "u,v,length\n1,2,42.5\n"));
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_TRUE(edges[0].polyline.empty());
  EXPECT_EQ(edges[0].length, 42.5);
  EXPECT_THROW(read_edges_csv(put("b1.csv", "u,v,length\n1,2,-1\n")), ParseError);
  EXPECT_THROW(read_edges_csv(put("b2.csv", "u,v,geometry\n1,2,LINESTRING(0 0 3 4\n")), ParseError);
  EXPECT_THROW(read_edges_csv(put("b3.csv", "a,b,c\n")), ParseError);
}

TEST(Wkt, ParsesAndRejects) {
  EXPECT_EQ(parse_wkt_linestring("LINESTRING (1 2, 3.5 -4)").value(), (std::vector<Point>{{1, 2}, {3.5, -4}}));
  EXPECT_EQ(parse_wkt_linestring("  linestring(0 0,1 1)  ").value().size(), 2u);
  EXPECT_FALSE(parse_wkt_linestring("POINT (1 2)"));
  EXPECT_FALSE(parse_wkt_linestring("LINESTRING (1 2)"));
  EXPECT_FALSE(parse_wkt_linestring("LINESTRING (1 2, 3)"));
}

using GeoJson = TempDir;

namespace {
const char* kSquare = R"({"type":"Polygon","coordinates":[[[0,0],[100,0],[100,100],[0,100],[0,0]]]})";
std::string fc(const std::string& geometry, const std::string& id = "\"a\"") {
  return R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":)" + id +
         R"(},"geometry":)" + geometry + "}]}";
}
}  // namespace

TEST_F(GeoJson, SquarePolygon) {
  const auto polys = read_polygons_geojson(put("a.geojson", fc(kSquare)));
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0].id(), "a");
  EXPECT_EQ(polys[0].outer_ring.size(), 5u);
}

TEST_F(GeoJson, MultiPolygonExplodesWithSharedId) {
  const std::string mp =
      R"({"type":"MultiPolygon","coordinates":[[[[0,0],[100,0],[100,100],[0,100],[0,0]]],)"
      R"([[[200,0],[300,0],[300,100],[200,100],[200,0]]]]})";
  const auto polys = read_polygons_geojson(put("m.geojson", fc(mp, "7")));
  ASSERT_EQ(polys.size(), 2u);
  EXPECT_EQ(polys[0].id(), "7");
  EXPECT_EQ(polys[1].id(), "7");
}

TEST_F(GeoJson, RejectsUnsupportedAndUnclosed) {
  EXPECT_THROW(read_polygons_geojson(put("l.geojson", fc(R"({"type":"LineString","coordinates":[[0,0],[1,1]]})"))),
               InvalidGeometry);
  EXPECT_THROW(read_polygons_geojson(put("u.geojson", fc(R"({"type":"Polygon","coordinates":[[[0,0],[100,0],[100,100],[0,100]]]})"))),
               InvalidGeometry);
  EXPECT_THROW(read_polygons_geojson(put("j.geojson", "{not json")), ParseError);
  const std::string no_id = R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{},"geometry":)" +
                            std::string(kSquare) + "}]}";
  EXPECT_THROW(read_polygons_geojson(put("n.geojson", no_id)), ParseError);
}

using Render = TempDir;

TEST_F(Render, SingleCellTopDecile) {
  DecileField d{RasterLayer(GridSpec(0, 0, 100, 1, 1), 10.0)};
  const std::string bytes = decile_ppm_bytes(d);
  EXPECT_EQ(bytes, std::string("P6\n1 1\n255\n") + char(0) + char(104) + char(55));
}

TEST_F(Render, AllNodataIsWhite) {
  DecileField d{RasterLayer(GridSpec(0, 0, 100, 2, 3))};
  const std::string bytes = decile_ppm_bytes(d);
  const std::string head = "P6\n3 2\n255\n";
  ASSERT_EQ(bytes.size(), head.size() + 18);
  EXPECT_TRUE(std::all_of(bytes.begin() + head.size(), bytes.end(), [](char c) { return c == char(255); }));
}

TEST_F(Render, GoldenBytesAndDeterminism) {
  // 2 rows x 5 cols; south row holds deciles 1..5, north row 6..10.
  const GridSpec g(0, 0, 100, 2, 5);
  RasterLayer l(g);
  for (int c = 0; c < 5; ++c) {
    l.at({0, c}) = c + 1;
    l.at({1, c}) = c + 6;
  }
  const DecileField d{l};
  std::string expected = "P6\n5 2\n255\n";
  for (int dec : {6, 7, 8, 9, 10, 1, 2, 3, 4, 5}) {
    const auto& px = kDecilePalette[dec - 1];
    expected += {char(px.r), char(px.g), char(px.b)};
  }
  EXPECT_EQ(decile_ppm_bytes(d), expected);
  render_decile_map(d, dir_ / "a.ppm");
  render_decile_map(d, dir_ / "b.ppm");
  EXPECT_EQ(detail::read_file(dir_ / "a.ppm"), detail::read_file(dir_ / "b.ppm"));
  EXPECT_EQ(detail::read_file(dir_ / "a.ppm"), detail::read_file(fs::path(WALKIDX_TEST_DATA) / "golden_2x5.ppm"));
}

TEST(FormatReal, SeventeenDigitsRoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
  EXPECT_EQ(format_optional(std::nullopt), "");
}
