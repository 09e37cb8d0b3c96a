#pragma once

// File formats: ESRI-style ASCII grids, CSV point/node/edge tables, GeoJSON
// polygons, PPM decile maps and the CSV number format shared by all outputs.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "walkidx/error.hpp"
#include "walkidx/fields.hpp"
#include "walkidx/grid.hpp"
#include "walkidx/raster.hpp"

namespace walkidx {

// ---------------------------------------------------------------------------
// text helpers

/// 17 significant digits: enough for an exact double round-trip.
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string{};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  for (;;) {
    const auto e = s.find(sep, b);
    out.push_back(s.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ASCII grid

inline RasterLayer read_ascii_grid(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  const auto lines = detail::lines_of(text);
  const std::string src = path.string();
  static constexpr std::array<std::string_view, 6> keys = {"ncols",     "nrows",    "xllcorner",
                                                           "yllcorner", "cellsize", "NODATA_value"};
  std::array<double, 6> header{};
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (k >= lines.size()) throw ParseError(src, k + 1, "missing header line '" + std::string(keys[k]) + "'");
    const auto tok = detail::split_ws(lines[k]);
    if (tok.size() != 2 || !detail::iequals(tok[0], keys[k]))
      throw ParseError(src, k + 1, "expected header '" + std::string(keys[k]) + " <value>'");
    const auto v = detail::parse_double(tok[1]);
    if (!v || !std::isfinite(*v)) throw ParseError(src, k + 1, "non-numeric header value");
    header[k] = *v;
  }
  const auto n_cols = static_cast<std::int64_t>(header[0]);
  const auto n_rows = static_cast<std::int64_t>(header[1]);
  if (static_cast<double>(n_cols) != header[0] || static_cast<double>(n_rows) != header[1])
    throw ParseError(src, 1, "ncols/nrows must be integers");
  GridSpec grid;
  try {
    grid = GridSpec(header[2], header[3], header[4], n_rows, n_cols);
  } catch (const ConfigError& e) {
    throw ParseError(src, 1, e.what());
  }
  const double nodata = header[5];
  RasterLayer layer(grid, nodata, nodata);

  std::size_t line_no = keys.size();
  for (std::int64_t file_row = 0; file_row < n_rows; ++file_row) {
    // Skip blank lines between rows.
    while (line_no < lines.size() && detail::trim(lines[line_no]).empty()) ++line_no;
    if (line_no >= lines.size()) throw ParseError(src, line_no + 1, "missing data row");
    const auto tok = detail::split_ws(lines[line_no]);
    if (static_cast<std::int64_t>(tok.size()) != n_cols)
      throw ParseError(src, line_no + 1,
                       "row has " + std::to_string(tok.size()) + " values, expected " +
                           std::to_string(n_cols));
    const std::int64_t row = n_rows - 1 - file_row;
    for (std::int64_t c = 0; c < n_cols; ++c) {
      const auto v = detail::parse_double(tok[static_cast<std::size_t>(c)]);
      if (!v) throw ParseError(src, line_no + 1, "non-numeric token '" + std::string(tok[static_cast<std::size_t>(c)]) + "'");
      if (std::bit_cast<std::uint64_t>(*v) != std::bit_cast<std::uint64_t>(nodata) && !std::isfinite(*v))
        throw ParseError(src, line_no + 1, "non-finite value");
      layer.at({row, c}) = *v;
    }
    ++line_no;
  }
  for (; line_no < lines.size(); ++line_no)
    if (!detail::trim(lines[line_no]).empty())
      throw ParseError(src, line_no + 1, "unexpected data after last row");
  return layer;
}

inline std::string ascii_grid_bytes(const RasterLayer& layer) {
  const GridSpec& g = layer.grid();
  std::string out;
  out.reserve(g.size() * 12 + 200);
  out += "ncols " + std::to_string(g.n_cols()) + "\n";
  out += "nrows " + std::to_string(g.n_rows()) + "\n";
  out += "xllcorner " + format_real(g.origin_x()) + "\n";
  out += "yllcorner " + format_real(g.origin_y()) + "\n";
  out += "cellsize " + format_real(g.cell_size()) + "\n";
  out += "NODATA_value " + format_real(layer.nodata()) + "\n";
  for (std::int64_t r = g.n_rows() - 1; r >= 0; --r) {
    for (std::int64_t c = 0; c < g.n_cols(); ++c) {
      if (c) out += ' ';
      out += format_real(layer.at({r, c}));
    }
    out += '\n';
  }
  return out;
}

inline void write_ascii_grid(const RasterLayer& layer, const std::filesystem::path& path) {
  if (layer.values().size() != layer.grid().size() || layer.grid().size() == 0)
    throw Error(ErrorClass::data, "refusing to write an empty or inconsistent raster");
  detail::write_file(path, ascii_grid_bytes(layer));
}

// ---------------------------------------------------------------------------
// CSV tables

struct PointRecord {
  Point location;
  std::string category;
};

inline std::vector<PointRecord> read_points_csv(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  const auto lines = detail::lines_of(text);
  const std::string src = path.string();
  if (lines.empty() || detail::trim(lines[0]) != "x,y,category")
    throw ParseError(src, 1, "missing header 'x,y,category'");
  std::vector<PointRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 3) throw ParseError(src, i, "expected 3 fields");
    const auto x = detail::parse_double(f[0]);
    const auto y = detail::parse_double(f[1]);
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y))
      throw ParseError(src, i, "unparseable coordinate");
    const auto cat = detail::trim(f[2]);
    if (cat.empty()) throw ParseError(src, i, "empty category");
    out.push_back({{*x, *y}, std::string(cat)});
  }
  return out;
}

using NodeId = std::int64_t;

struct NodeRecord {
  NodeId id = 0;
  Point location;
};

/// One street segment as read from disk. Exactly one of polyline/length is
/// authoritative: geometry rows carry a polyline, length rows a length.
struct EdgeRecord {
  NodeId u = 0;
  NodeId v = 0;
  std::vector<Point> polyline;
  std::optional<double> length;
  bool self_loop = false;
};

inline std::vector<NodeRecord> read_nodes_csv(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  const auto lines = detail::lines_of(text);
  const std::string src = path.string();
  if (lines.empty() || detail::trim(lines[0]) != "id,x,y")
    throw ParseError(src, 1, "missing header 'id,x,y'");
  std::vector<NodeRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 3) throw ParseError(src, i, "expected 3 fields");
    const auto id = detail::parse_int(f[0]);
    const auto x = detail::parse_double(f[1]);
    const auto y = detail::parse_double(f[2]);
    if (!id || !x || !y || !std::isfinite(*x) || !std::isfinite(*y))
      throw ParseError(src, i, "unparseable node row");
    out.push_back({*id, {*x, *y}});
  }
  return out;
}

/// Parses `LINESTRING(x y, x y, ...)`.
inline std::optional<std::vector<Point>> parse_wkt_linestring(std::string_view s) {
  s = detail::trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = detail::trim(s.substr(1, s.size() - 2));
  constexpr std::string_view tag = "LINESTRING";
  if (s.size() < tag.size() || !detail::iequals(s.substr(0, tag.size()), tag)) return std::nullopt;
  s = detail::trim(s.substr(tag.size()));
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') return std::nullopt;
  s = s.substr(1, s.size() - 2);
  std::vector<Point> pts;
  for (auto part : detail::split(s, ',')) {
    const auto xy = detail::split_ws(part);
    if (xy.size() != 2) return std::nullopt;
    const auto x = detail::parse_double(xy[0]);
    const auto y = detail::parse_double(xy[1]);
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) return std::nullopt;
    pts.push_back({*x, *y});
  }
  if (pts.size() < 2) return std::nullopt;
  return pts;
}

inline double polyline_length(const std::vector<Point>& pts) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    total += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  return total;
}

/// Reads `u,v,geometry` (WKT) or `u,v,length` edges. When `nodes` is given it
/// is authoritative and every endpoint must appear in it.
inline std::vector<EdgeRecord> read_edges_csv(const std::filesystem::path& path,
                                              const std::vector<NodeRecord>* nodes = nullptr) {
  const std::string text = detail::read_file(path);
  const auto lines = detail::lines_of(text);
  const std::string src = path.string();
  if (lines.empty()) throw ParseError(src, 1, "missing header");
  const auto header = detail::trim(lines[0]);
  const bool geometry = header == "u,v,geometry";
  if (!geometry && header != "u,v,length")
    throw ParseError(src, 1, "header must be 'u,v,geometry' or 'u,v,length'");

  std::vector<NodeId> known;
  if (nodes) {
    for (const auto& n : *nodes) known.push_back(n.id);
    std::sort(known.begin(), known.end());
  }
  std::vector<EdgeRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (detail::trim(line).empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos) throw ParseError(src, i, "expected 3 fields");
    const auto u = detail::parse_int(line.substr(0, c1));
    const auto v = detail::parse_int(line.substr(c1 + 1, c2 - c1 - 1));
    if (!u || !v) throw ParseError(src, i, "unparseable node id");
    EdgeRecord e;
    e.u = *u;
    e.v = *v;
    e.self_loop = *u == *v;
    const auto rest = line.substr(c2 + 1);
    if (geometry) {
      auto pts = parse_wkt_linestring(rest);
      if (!pts) throw ParseError(src, i, "WKT syntax error");
      e.polyline = std::move(*pts);
      e.length = polyline_length(e.polyline);
    } else {
      const auto len = detail::parse_double(rest);
      if (!len || !std::isfinite(*len) || *len < 0.0) throw ParseError(src, i, "bad length");
      e.length = *len;
    }
    if (nodes) {
      for (NodeId id : {e.u, e.v})
        if (!std::binary_search(known.begin(), known.end(), id))
          throw ParseError(src, i, "dangling node reference " + std::to_string(id));
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// GeoJSON polygons

namespace detail {

inline Ring parse_ring(const nlohmann::json& coords, const std::string& ctx) {
  if (!coords.is_array()) throw InvalidGeometry(ctx + "ring is not an array");
  Ring ring;
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
      throw InvalidGeometry(ctx + "bad coordinate");
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  return ring;
}

inline PolygonGeometry parse_polygon(const nlohmann::json& rings, const std::string& ctx) {
  if (!rings.is_array() || rings.empty()) throw InvalidGeometry(ctx + "polygon has no rings");
  PolygonGeometry poly;
  poly.outer_ring = parse_ring(rings[0], ctx);
  for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i], ctx));
  validate_polygon(poly, ctx);
  return poly;
}

inline std::string property_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace detail

/// MultiPolygons are exploded into parts that share the feature's properties.
inline std::vector<PolygonGeometry> read_polygons_geojson(const std::filesystem::path& path) {
  const std::string src = path.string();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(src, 1, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array())
    throw ParseError(src, 1, "expected a GeoJSON FeatureCollection");

  std::vector<PolygonGeometry> out;
  std::size_t feature_no = 0;
  for (const auto& feature : doc["features"]) {
    ++feature_no;
    const std::string ctx = src + ": feature " + std::to_string(feature_no) + ": ";
    if (!feature.is_object() || !feature.contains("geometry") || !feature["geometry"].is_object())
      throw ParseError(src, feature_no, "feature without geometry");
    std::map<std::string, std::string> props;
    if (feature.contains("properties") && feature["properties"].is_object())
      for (const auto& [k, v] : feature["properties"].items()) props[k] = detail::property_text(v);
    if (!props.contains("id")) throw ParseError(src, feature_no, "feature property 'id' is required");

    const auto& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    const auto& coords = geom.contains("coordinates") ? geom["coordinates"] : nlohmann::json();
    if (type == "Polygon") {
      out.push_back(detail::parse_polygon(coords, ctx));
      out.back().properties = props;
    } else if (type == "MultiPolygon") {
      if (!coords.is_array()) throw InvalidGeometry(ctx + "bad MultiPolygon coordinates");
      for (const auto& part : coords) {
        out.push_back(detail::parse_polygon(part, ctx));
        out.back().properties = props;
      }
    } else {
      throw InvalidGeometry(ctx + "unsupported geometry type '" + type + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decile map rendering

struct Rgb {
  std::uint8_t r, g, b;
};

/// Decile 1 (least walkable, red) through 10 (most walkable, green).
inline constexpr std::array<Rgb, 10> kDecilePalette = {{{165, 0, 38},
                                                         {215, 48, 39},
                                                         {244, 109, 67},
                                                         {253, 174, 97},
                                                         {254, 224, 139},
                                                         {217, 239, 139},
                                                         {166, 217, 106},
                                                         {102, 189, 99},
                                                         {26, 152, 80},
                                                         {0, 104, 55}}};
inline constexpr Rgb kNodataColor{255, 255, 255};

inline std::string decile_ppm_bytes(const DecileField& deciles) {
  const RasterLayer& l = deciles.labels;
  const GridSpec& g = l.grid();
  std::string out = "P6\n" + std::to_string(g.n_cols()) + " " + std::to_string(g.n_rows()) + "\n255\n";
  out.reserve(out.size() + g.size() * 3);
  for (std::int64_t r = g.n_rows() - 1; r >= 0; --r)
    for (std::int64_t c = 0; c < g.n_cols(); ++c) {
      Rgb px = kNodataColor;
      const double v = l.at({r, c});
      if (!l.is_nodata(CellId{r, c}) && v >= 1.0 && v <= 10.0 && std::floor(v) == v)
        px = kDecilePalette[static_cast<std::size_t>(v) - 1];
      out += static_cast<char>(px.r);
      out += static_cast<char>(px.g);
      out += static_cast<char>(px.b);
    }
  return out;
}

inline void render_decile_map(const DecileField& deciles, const std::filesystem::path& path) {
  detail::write_file(path, decile_ppm_bytes(deciles));
}

}  // namespace walkidx
