#pragma once

// Dataset CSV: header "y,t_<g1>,t_<g2>,...", one curve per row, label first.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rkhs_logit/dataset.hpp"
#include "rkhs_logit/errors.hpp"

namespace rkhs_logit {

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::string format_number(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace detail

inline std::string dataset_to_csv(const FunctionalDataset& data) {
  data.validate();
  std::string out = "y";
  for (double g : data.grid) out += ",t_" + detail::format_number(g, 6);
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.labels[i]);
    for (Eigen::Index j = 0; j < data.curves.cols(); ++j) {
      out += ',';
      out += detail::format_number(data.curves(static_cast<Eigen::Index>(i), j), 17);
    }
    out += '\n';
  }
  return out;
}

inline FunctionalDataset dataset_from_csv(std::istream& in) {
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw ParseError("empty file: missing header", row);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = detail::split_commas(line);
  if (header.size() < 2 || detail::trim(header[0]) != "y") {
    throw ParseError("malformed header: expected 'y,t_<g1>,...'", row);
  }
  FunctionalDataset data;
  for (std::size_t j = 1; j < header.size(); ++j) {
    const auto cell = detail::trim(header[j]);
    double g = 0.0;
    if (cell.substr(0, 2) != "t_" || !detail::parse_double(cell.substr(2), g)) {
      throw ParseError("malformed header column '" + std::string(cell) + "'", row);
    }
    if (!data.grid.empty() && !(g > data.grid.back())) {
      throw ParseError("header grid is not strictly increasing", row);
    }
    data.grid.push_back(g);
  }
  const std::size_t m = data.grid.size();
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != m + 1) {
      throw ParseError("jagged row: expected " + std::to_string(m + 1) + " fields, got " +
                           std::to_string(cells.size()),
                       row);
    }
    double y = 0.0;
    if (!detail::parse_double(cells[0], y) || (y != 0.0 && y != 1.0)) {
      throw ParseError("label must be 0 or 1, got '" + std::string(detail::trim(cells[0])) + "'", row);
    }
    data.labels.push_back(static_cast<int>(y));
    for (std::size_t j = 1; j <= m; ++j) {
      double v = 0.0;
      if (!detail::parse_double(cells[j], v) || !std::isfinite(v)) {
        throw ParseError("non-numeric value in column " + std::to_string(j + 1), row);
      }
      values.push_back(v);
    }
  }
  if (data.labels.empty()) throw ParseError("no data rows", row);
  data.curves = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(data.labels.size()), static_cast<Eigen::Index>(m));
  return data;
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline FunctionalDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return dataset_from_csv(in);
}

inline void save_csv(const FunctionalDataset& data, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_csv(data));
}

}  // namespace rkhs_logit
