#pragma once

// Deterministic emission of result tables: CSV with `# key=value` metadata
// comment lines, gnuplot-style two-column plot data, and JSON documents.
// Identical inputs produce identical bytes — no clocks, locales, or pointer
// values are ever consulted.  Doubles are printed with %.17g (shortest
// round-trippable form for IEEE binary64 under g++), exact rationals as
// "p/q".

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "renorm/numeric.hpp"
#include "renorm/surd.hpp"

namespace renorm {

using Json = nlohmann::ordered_json;

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_int(const BigInt& n) { return n.str(); }

inline std::string fmt_rat(const BigRat& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

inline std::string fmt_surd(const Surd& s) { return s.str(); }

inline void write_text_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write file: " + path);
  out << content;
  if (!out) throw config_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Table: one rectangular result set plus metadata, serializable to CSV or
// JSON.  CSV layout:
//
//   # key=value
//   col_a,col_b
//   1,2
//
// JSON layout: {"meta": {...}, "columns": [...], "rows": [[...], ...]} with
// every cell kept as a string so exact integers survive unmangled.
// ---------------------------------------------------------------------------

struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_meta(std::string key, std::string value) {
    meta.emplace_back(std::move(key), std::move(value));
  }
  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns.size())
      throw internal_error("table: row width does not match column count");
    rows.push_back(std::move(cells));
  }

  std::string csv() const {
    std::string out;
    for (const auto& [k, v] : meta) out += "# " + k + "=" + v + "\n";
    for (size_t c = 0; c < columns.size(); ++c)
      out += (c ? "," : "") + columns[c];
    out += "\n";
    for (const auto& r : rows) {
      for (size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + r[c];
      out += "\n";
    }
    return out;
  }

  Json json() const {
    Json j;
    Json m = Json::object();
    for (const auto& [k, v] : meta) m[k] = v;
    j["meta"] = std::move(m);
    j["columns"] = columns;
    Json rs = Json::array();
    for (const auto& r : rows) rs.push_back(r);
    j["rows"] = std::move(rs);
    return j;
  }

  /// Writes `<dir>/<stem>.csv` or `<dir>/<stem>.json`; returns the path.
  std::string save(const std::string& dir, const std::string& stem,
                   const std::string& format) const {
    std::string path = (std::filesystem::path(dir) / (stem + "." + format)).string();
    if (format == "csv") {
      write_text_file(path, csv());
    } else if (format == "json") {
      write_text_file(path, json().dump(2) + "\n");
    } else {
      throw config_error("unknown output format: " + format);
    }
    return path;
  }
};

/// Gnuplot-style plot data: `# comment` header, then "x y" pairs, one per
/// line, separated by a single space.
inline std::string plot_xy(const std::vector<std::pair<double, double>>& pts,
                           const std::string& comment) {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  for (const auto& [x, y] : pts) out += fmt_double(x) + " " + fmt_double(y) + "\n";
  return out;
}

inline void save_json(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace renorm
