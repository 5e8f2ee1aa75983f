#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bayesel/dataset.hpp"

namespace bayesel {

/// Raised by CSV ingestion on malformed input (ragged rows, non-numeric or
/// non-finite cells, empty files).  The message names the offending line.
class csv_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

/// Strict full-cell numeric parse; rejects empty cells, trailing junk,
/// NaN and infinities.
inline bool parse_cell(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + cell.size()) return false;
  if (!std::isfinite(v)) return false;
  out = v;
  return true;
}

}  // namespace detail

/// Render a double with 17 significant digits ("%.17g"), enough to
/// round-trip exactly.  All numeric file output goes through here so that
/// identical runs produce byte-identical files.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

/// Load a rectangular numeric CSV.  A non-numeric first line is treated as
/// a header and skipped.  Blank lines at the end are ignored.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw csv_error("cannot open '" + path + "'");

  std::vector<std::vector<double>> table;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    std::vector<double> row(cells.size());
    bool all_numeric = true;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (!detail::parse_cell(cells[j], row[j])) {
        all_numeric = false;
        break;
      }
    }
    if (!all_numeric) {
      if (first_content_line) {  // header row
        first_content_line = false;
        continue;
      }
      throw csv_error(path + ": non-numeric or non-finite cell on line " +
                      std::to_string(line_no));
    }
    first_content_line = false;
    if (!table.empty() && row.size() != table.front().size()) {
      throw csv_error(path + ": ragged row on line " + std::to_string(line_no) +
                      " (expected " + std::to_string(table.front().size()) +
                      " columns, got " + std::to_string(row.size()) + ")");
    }
    table.push_back(std::move(row));
  }
  if (table.empty()) throw csv_error(path + ": no numeric rows");

  Eigen::MatrixXd m(table.size(), table.front().size());
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < table.front().size(); ++j) m(i, j) = table[i][j];
  return Dataset(std::move(m));
}

/// Write a matrix as CSV with an optional header row.
inline void write_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw csv_error("cannot write '" + path + "'");
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j) out << ',';
      out << header[j];
    }
    out << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace bayesel
