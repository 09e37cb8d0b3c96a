#pragma once

// Deterministic synthetic city: a jittered street lattice, smooth rasters
// and polygons written in the pipeline's input formats, plus a config file.
// Used for fixtures, benchmarks and demos.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "walkidx/grid.hpp"
#include "walkidx/io.hpp"
#include "walkidx/raster.hpp"

namespace walkidx {

struct SyntheticCityOptions {
  std::int64_t n_rows = 200;
  std::int64_t n_cols = 200;
  double cell_size = 100.0;
  double origin_x = 4'000'000.0;
  double origin_y = 3'000'000.0;
  int fine_factor = 2;           // NDVI/DEM pixels per cell side
  std::int64_t street_nodes = 0;  // lattice nodes per side; 0 = one per cell column
  double street_spacing = 100.0;
  double edge_drop = 0.08;
  std::uint64_t seed = 7;
  unsigned threads = 0;  // written into the config; 0 leaves it out
};

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

 private:
  std::mt19937_64 eng_;
};

inline nlohmann::json ring_json(const Ring& r) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : r) a.push_back({p.x, p.y});
  return a;
}

inline Ring rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

}  // namespace detail

/// Writes the fixture files into `dir` and returns the config path.
inline std::filesystem::path write_synthetic_city(const std::filesystem::path& dir,
                                                  const SyntheticCityOptions& o = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  detail::Rng rng(o.seed);
  const GridSpec grid(o.origin_x, o.origin_y, o.cell_size, o.n_rows, o.n_cols);
  const double width = grid.max_x() - grid.origin_x();
  const double height = grid.max_y() - grid.origin_y();
  const double cx = grid.origin_x() + 0.5 * width;
  const double cy = grid.origin_y() + 0.5 * height;
  const double half = 0.5 * std::min(width, height);
  auto radial = [&](double x, double y) { return std::hypot(x - cx, y - cy) / half; };

  // Street lattice centred on the grid.
  const std::int64_t n_side = o.street_nodes > 0 ? o.street_nodes : std::min(o.n_rows, o.n_cols);
  const double span = static_cast<double>(n_side - 1) * o.street_spacing;
  const double sx = cx - 0.5 * span;
  const double sy = cy - 0.5 * span;
  std::string nodes_csv = "id,x,y\n";
  std::vector<Point> node_pos(static_cast<std::size_t>(n_side * n_side));
  for (std::int64_t j = 0; j < n_side; ++j)
    for (std::int64_t i = 0; i < n_side; ++i) {
      const auto id = j * n_side + i;
      // Round to centimetres so the CSV text is exact.
      const double x = std::round((sx + static_cast<double>(i) * o.street_spacing +
                                   rng.uniform(-0.2, 0.2) * o.street_spacing) * 100.0) / 100.0;
      const double y = std::round((sy + static_cast<double>(j) * o.street_spacing +
                                   rng.uniform(-0.2, 0.2) * o.street_spacing) * 100.0) / 100.0;
      node_pos[static_cast<std::size_t>(id)] = {x, y};
      nodes_csv += std::to_string(id) + "," + format_real(x) + "," + format_real(y) + "\n";
    }
  std::string edges_csv = "u,v,geometry\n";
  auto add_edge = [&](std::int64_t a, std::int64_t b) {
    if (rng.uniform() < o.edge_drop) return;
    const Point p = node_pos[static_cast<std::size_t>(a)];
    const Point q = node_pos[static_cast<std::size_t>(b)];
    std::string wkt = "LINESTRING(" + format_real(p.x) + " " + format_real(p.y);
    if (rng.uniform() < 0.3) {  // bent street
      const double mx = std::round((0.5 * (p.x + q.x) + rng.uniform(-10, 10)) * 100.0) / 100.0;
      const double my = std::round((0.5 * (p.y + q.y) + rng.uniform(-10, 10)) * 100.0) / 100.0;
      wkt += ", " + format_real(mx) + " " + format_real(my);
    }
    wkt += ", " + format_real(q.x) + " " + format_real(q.y) + ")";
    edges_csv += std::to_string(a) + "," + std::to_string(b) + "," + wkt + "\n";
  };
  for (std::int64_t j = 0; j < n_side; ++j)
    for (std::int64_t i = 0; i < n_side; ++i) {
      const auto id = j * n_side + i;
      if (i + 1 < n_side) add_edge(id, id + 1);
      if (j + 1 < n_side) add_edge(id, id + n_side);
    }
  detail::write_file(dir / "nodes.csv", nodes_csv);
  detail::write_file(dir / "edges.csv", edges_csv);

  // Fine rasters: NDVI rises towards the periphery, DEM is a pair of hills.
  const GridSpec fine(o.origin_x, o.origin_y, o.cell_size / o.fine_factor, o.n_rows * o.fine_factor,
                      o.n_cols * o.fine_factor);
  RasterLayer ndvi(fine, 0.0, -9999.0);
  RasterLayer dem(fine, 0.0, -9999.0);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const Point p = centroid(fine.cell(i), fine);
    const double r = radial(p.x, p.y);
    const double v = 0.1 + 0.45 * std::min(r, 1.2) + 0.1 * std::sin(p.x / 700.0) * std::cos(p.y / 900.0) +
                     rng.uniform(-0.05, 0.05);
    ndvi[i] = std::round(std::clamp(v, -1.0, 1.0) * 1e4) / 1e4;
    if (rng.uniform() < 0.01) ndvi.set_nodata(i);
    const double z = 120.0 + 35.0 * std::sin((p.x - o.origin_x) / 1700.0) +
                     25.0 * std::cos((p.y - o.origin_y) / 1300.0) + 0.004 * (p.x - o.origin_x);
    dem[i] = std::round(z * 100.0) / 100.0;
  }
  write_ascii_grid(ndvi, dir / "ndvi.asc");
  write_ascii_grid(dem, dir / "dem.asc");

  // Grid-resolution rasters.
  RasterLayer corine(grid, 0.0, -9999.0);
  RasterLayer pop(grid, 0.0, -9999.0);
  RasterLayer urb(grid, 0.0, -9999.0);
  const std::int64_t inner[] = {111, 112, 121, 141};
  const std::int64_t middle[] = {112, 121, 122, 141, 142, 111};
  const std::int64_t outer[] = {211, 231, 311, 312, 512, 243, 999};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point p = centroid(grid.cell(i), grid);
    const double r = radial(p.x, p.y);
    std::int64_t code;
    if (r < 0.12) code = rng.uniform() < 0.8 ? 111 : 121;
    else if (r < 0.35) code = inner[rng.below(4)];
    else if (r < 0.6) code = middle[rng.below(6)];
    else code = outer[rng.below(7)];
    corine[i] = static_cast<double>(code);
    if (rng.uniform() < 0.005) corine.set_nodata(i);

    const double density = 400.0 * std::exp(-(r / 0.35) * (r / 0.35)) * rng.uniform(0.5, 1.5);
    pop[i] = rng.uniform() < 0.05 ? 0.0 : std::round(density);
    if (rng.uniform() < 0.002) pop.set_nodata(i);

    int cls;
    if (r < 0.15) cls = 7;
    else if (r < 0.25) cls = 6;
    else if (r < 0.35) cls = 5;
    else if (r < 0.5) cls = 4;
    else if (r < 0.65) cls = 3;
    else if (r < 0.85) cls = 2;
    else cls = 1;
    urb[i] = cls;
  }
  write_ascii_grid(corine, dir / "corine.asc");
  write_ascii_grid(pop, dir / "pop.asc");
  write_ascii_grid(urb, dir / "urbanization.asc");

  // Parks, one with a pond (hole), one split into two parts.
  nlohmann::json green = {{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
  const int n_parks = static_cast<int>(std::max<std::int64_t>(3, grid.size() / 2500));
  for (int k = 0; k < n_parks; ++k) {
    const double w = rng.uniform(150, 900), h = rng.uniform(150, 900);
    const double x0 = std::round(rng.uniform(grid.origin_x(), grid.max_x() - w));
    const double y0 = std::round(rng.uniform(grid.origin_y(), grid.max_y() - h));
    nlohmann::json coords = nlohmann::json::array();
    coords.push_back(detail::ring_json(detail::rect(x0, y0, x0 + w, y0 + h)));
    std::string type = "Polygon";
    if (k == 0) {
      coords.push_back(detail::ring_json(detail::rect(x0 + 0.3 * w, y0 + 0.3 * h, x0 + 0.6 * w, y0 + 0.6 * h)));
    } else if (k == 1) {
      type = "MultiPolygon";
      nlohmann::json second = nlohmann::json::array();
      second.push_back(detail::ring_json(detail::rect(x0 + w + 200, y0, x0 + w + 400, y0 + 200)));
      coords = nlohmann::json::array({coords, second});
    }
    green["features"].push_back({{"type", "Feature"},
                                 {"properties", {{"id", "park-" + std::to_string(k)}}},
                                 {"geometry", {{"type", type}, {"coordinates", coords}}}});
  }
  detail::write_file(dir / "green.geojson", green.dump() + "\n");

  // Transit stops near street nodes, denser in the centre.
  std::string stops = "x,y,category\n";
  const char* modes[] = {"bus", "tram", "rail"};
  for (std::size_t n = 0; n < node_pos.size(); ++n) {
    const Point p = node_pos[n];
    if (rng.uniform() > 0.25 * std::exp(-radial(p.x, p.y))) continue;
    stops += format_real(std::round(p.x + rng.uniform(-15, 15))) + "," +
             format_real(std::round(p.y + rng.uniform(-15, 15))) + "," + modes[rng.below(3)] + "\n";
  }
  detail::write_file(dir / "transit.csv", stops);

  // Admin units: a 3x3 block partition; two blocks share one id.
  nlohmann::json admin = {{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
  const std::int64_t br[] = {0, o.n_rows / 3, 2 * o.n_rows / 3, o.n_rows};
  const std::int64_t bc[] = {0, o.n_cols / 3, 2 * o.n_cols / 3, o.n_cols};
  auto block = [&](int a, int b) {
    return detail::ring_json(detail::rect(grid.origin_x() + static_cast<double>(bc[b]) * o.cell_size,
                                          grid.origin_y() + static_cast<double>(br[a]) * o.cell_size,
                                          grid.origin_x() + static_cast<double>(bc[b + 1]) * o.cell_size,
                                          grid.origin_y() + static_cast<double>(br[a + 1]) * o.cell_size));
  };
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      if (a == 2 && b == 2) continue;  // merged into unit 0-0
      nlohmann::json geom;
      if (a == 0 && b == 0)
        geom = {{"type", "MultiPolygon"},
                {"coordinates", nlohmann::json::array({nlohmann::json::array({block(0, 0)}),
                                                       nlohmann::json::array({block(2, 2)})})}};
      else
        geom = {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({block(a, b)})}};
      admin["features"].push_back({{"type", "Feature"},
                                   {"properties", {{"id", "unit-" + std::to_string(a) + std::to_string(b)}}},
                                   {"geometry", geom}});
    }
  detail::write_file(dir / "admin.geojson", admin.dump() + "\n");

  std::string cfg;
  cfg += "# synthetic city fixture\n";
  cfg += "grid.origin_x = " + format_real(o.origin_x) + "\n";
  cfg += "grid.origin_y = " + format_real(o.origin_y) + "\n";
  cfg += "grid.cell_size = " + format_real(o.cell_size) + "\n";
  cfg += "grid.n_rows = " + std::to_string(o.n_rows) + "\n";
  cfg += "grid.n_cols = " + std::to_string(o.n_cols) + "\n";
  cfg += "input.nodes = nodes.csv\ninput.edges = edges.csv\ninput.ndvi = ndvi.asc\ninput.dem = dem.asc\n";
  cfg += "input.corine = corine.asc\ninput.pop = pop.asc\ninput.urbanization = urbanization.asc\n";
  cfg += "input.green = green.geojson\ninput.transit = transit.csv\ninput.admin = admin.geojson\n";
  cfg += "output.dir = out\n";
  cfg += "decay.sigma_m = 637.5\niso.budget_s = 900\niso.speed_kmh = 5.1\niso.snap_radius_m = 100\n";
  cfg += "lum.window_radius = 2\ngs.supersample = 10\nslope.method = horn\nper_capita = true\n";
  cfg += "moran.scheme = queen\n";
  if (o.threads) cfg += "threads = " + std::to_string(o.threads) + "\n";
  const auto cfg_path = dir / "walkidx.conf";
  detail::write_file(cfg_path, cfg);
  return cfg_path;
}

}  // namespace walkidx
