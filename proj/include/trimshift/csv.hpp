#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "trimshift/dataset.hpp"

namespace trimshift {

/// Shortest round-trip decimal form of a double; stable across runs, exact
/// under from_chars.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col_no) {
  const auto fail = [&](const std::string& why) {
    throw std::runtime_error("csv: line " + std::to_string(line_no) + ", column " +
                             std::to_string(col_no) + ": " + why + " ('" + cell + "')");
  };
  std::size_t begin = cell.find_first_not_of(" \t");
  std::size_t end = cell.find_last_not_of(" \t\r");
  if (begin == std::string::npos) fail("empty cell");
  double value = 0.0;
  const char* first = cell.data() + begin;
  const char* last = cell.data() + end + 1;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) fail("cannot parse as number");
  if (!std::isfinite(value)) fail("non-finite value");
  return value;
}

inline std::vector<std::string> split_fields(const std::string& line, std::size_t line_no) {
  if (line.find('"') != std::string::npos) {
    throw std::runtime_error("csv: line " + std::to_string(line_no) +
                             ": quoted fields are not supported");
  }
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline bool skippable(const std::string& line) {
  if (line.empty() || line[0] == '#') return true;
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

/// Reads a rectangular numeric table: response in the first column,
/// predictors in the rest. Lines starting with '#' and blank lines are
/// ignored; an optional single header row is skipped when has_header is set.
inline Dataset load_csv(const std::string& path, bool has_header = true) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");

  std::vector<double> y;
  std::vector<std::vector<double>> rows;
  std::size_t expected_fields = 0;
  bool header_pending = has_header;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const std::vector<std::string> fields = detail::split_fields(line, line_no);
    if (expected_fields == 0) {
      expected_fields = fields.size();
      if (expected_fields < 2) {
        throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                 ": need at least 2 columns (response, predictors)");
      }
    } else if (fields.size() != expected_fields) {
      throw std::runtime_error("csv: line " + std::to_string(line_no) + ": expected " +
                               std::to_string(expected_fields) + " fields, found " +
                               std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size() - 1);
    y.push_back(detail::parse_cell(fields[0], line_no, 1));
    for (std::size_t j = 1; j < fields.size(); ++j) {
      row[j - 1] = detail::parse_cell(fields[j], line_no, j + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("csv: '" + path + "' has no data rows");

  Matrix X(rows.size(), expected_fields - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < expected_fields; ++j) X(i, j) = rows[i][j];
  }
  return Dataset(std::move(y), std::move(X));
}

/// Writes response-first CSV. Column names default to y,x0,x1,...; a custom
/// predictor naming (e.g. original indices after screening) can be supplied,
/// as can leading '#' comment lines.
inline void save_csv(const std::string& path, const Dataset& data,
                     std::span<const std::string> predictor_names = {},
                     std::span<const std::string> comments = {}) {
  if (!predictor_names.empty() && predictor_names.size() != data.p()) {
    throw std::invalid_argument("save_csv: got " + std::to_string(predictor_names.size()) +
                                " predictor names for p = " + std::to_string(data.p()));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "y";
  for (std::size_t j = 0; j < data.p(); ++j) {
    out << ',' << (predictor_names.empty() ? "x" + std::to_string(j) : predictor_names[j]);
  }
  out << "\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]);
    for (std::size_t j = 0; j < data.p(); ++j) out << ',' << format_double(data.X(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("csv: write failure on '" + path + "'");
}

}  // namespace trimshift
