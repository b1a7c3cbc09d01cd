#pragma once

// Minimal CSV output: header-checked rows, 9-significant-digit floats.

#include <cmath>
#include <concepts>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ringplatoon {

inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value == 0.0 ? 0.0 : value);  // no "-0"
  return buf;
}

namespace detail {
inline std::string cell(double v) { return format_double(v); }
inline std::string cell(float v) { return format_double(v); }
inline std::string cell(std::string_view v) { return std::string(v); }
inline std::string cell(const std::string& v) { return v; }
inline std::string cell(const char* v) { return v; }
inline std::string cell(bool v) { return v ? "1" : "0"; }
template <std::integral T>
  requires(!std::same_as<T, bool>)
std::string cell(T v) {
  return std::to_string(v);
}
}  // namespace detail

/// Streams rows to `os`; every row must match the header width.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header) : os_(os), width_(header.size()) {
    bool first = true;
    for (auto h : header) {
      if (!first) os_ << ',';
      os_ << h;
      first = false;
    }
    os_ << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    if (sizeof...(Ts) != width_) throw std::logic_error("CsvWriter: row width does not match header");
    bool first = true;
    ((os_ << (first ? "" : ",") << detail::cell(values), first = false), ...);
    os_ << '\n';
  }

 private:
  std::ostream& os_;
  std::size_t width_;
};

/// In-memory table, validated before it is written.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  template <typename... Ts>
  void add(const Ts&... values) {
    rows.push_back({detail::cell(values)...});
  }

  /// Checks that every row matches the header width and that rows are
  /// non-decreasing in the `keys` columns, compared lexicographically in the
  /// given column order (numerically when both cells parse as numbers).
  void check_schema(const std::vector<std::size_t>& keys = {}) const {
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (rows[r].size() != header.size())
        throw std::logic_error("CSV schema check failed: row " + std::to_string(r) + " has wrong width");
    for (std::size_t c : keys)
      if (c >= header.size()) throw std::logic_error("CSV schema check failed: key column out of range");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      for (std::size_t c : keys) {
        const int cmp = compare_cells(rows[r - 1][c], rows[r][c]);
        if (cmp < 0) break;
        if (cmp > 0)
          throw std::logic_error("CSV schema check failed: keys not monotone at row " + std::to_string(r));
      }
    }
  }

  std::size_t column(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw std::invalid_argument("CSV: missing column '" + std::string(name) + "'");
  }

  void write(std::ostream& os) const {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t c = 0; c < cells.size(); ++c) os << (c ? "," : "") << cells[c];
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
  }

  /// Validates, then writes through a temporary file renamed into place.
  void write_file(const std::filesystem::path& path, const std::vector<std::size_t>& keys = {}) const {
    check_schema(keys);
    const auto tmp = std::filesystem::path(path).concat(".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      write(out);
      if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

  /// Reads a header + rows file with unquoted comma-separated cells.
  static CsvTable read(std::istream& is) {
    CsvTable t;
    std::string line;
    auto split = [](const std::string& l) {
      std::vector<std::string> cells;
      std::string cur;
      for (char ch : l) {
        if (ch == ',') {
          cells.push_back(cur);
          cur.clear();
        } else if (ch != '\r') {
          cur += ch;
        }
      }
      cells.push_back(cur);
      return cells;
    };
    if (!std::getline(is, line)) return t;
    t.header = split(line);
    while (std::getline(is, line))
      if (!line.empty()) t.rows.push_back(split(line));
    t.check_schema();
    return t;
  }

 private:
  static int compare_cells(const std::string& a, const std::string& b) {
    char* ea = nullptr;
    char* eb = nullptr;
    const double da = std::strtod(a.c_str(), &ea);
    const double db = std::strtod(b.c_str(), &eb);
    if (!a.empty() && !b.empty() && *ea == '\0' && *eb == '\0') return da < db ? -1 : (da > db ? 1 : 0);
    return a < b ? -1 : (a > b ? 1 : 0);
  }
};

}  // namespace ringplatoon
