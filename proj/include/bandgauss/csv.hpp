#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bandgauss/errors.hpp"

namespace bandgauss::csv {

/// Shortest text that is still 17 significant digits, '.' separator.
inline std::string format(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != header.size()) throw std::logic_error("csv row width does not match header");
    rows.push_back(std::move(row));
  }

  void append(const Table& other) {
    for (const auto& row : other.rows) add(row);
  }
};

inline std::string cell_text(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format(*d);
  return std::get<std::string>(c);
}

/// Header first, ',' delimiter, LF line endings.
inline void write(std::ostream& os, const Table& t) {
  auto line = [&](const auto& cells, auto&& text) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << text(cells[i]);
    }
    os << '\n';
  };
  line(t.header, [](const std::string& s) { return s; });
  for (const auto& row : t.rows) line(row, cell_text);
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw UsageError("out", "cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw UsageError("out", "write to '" + path.string() + "' failed");
}

/// fig1.csv -> fig1.meta
inline std::filesystem::path meta_path(std::filesystem::path csv_path) { return csv_path.replace_extension(".meta"); }

}  // namespace bandgauss::csv
