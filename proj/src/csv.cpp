// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "magnet/errors.hpp"

namespace magnet {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      table.header = split_csv_line(line);
      header = false;
    } else {
      table.rows.push_back(split_csv_line(line));
    }
  }
  if (header) throw DataError("empty CSV file " + path.string());
  return table;
}

double parse_cell(const std::string& cell, const std::filesystem::path& source) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double value = 0.0;
  const auto* begin = cell.data();
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("non-numeric feature '" + cell + "' in " + source.string());
  }
  return value;
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw DataError("cannot write " + path.string());
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  begin_row();
  for (const auto& c : cells) cell(c);
  end_row();
}

void CsvWriter::begin_row() { first_ = true; }

void CsvWriter::separator() {
  if (!first_) out_ << ',';
  first_ = false;
}

void CsvWriter::cell(const std::string& text) {
  separator();
  out_ << text;
}

void CsvWriter::cell(double value) {
  separator();
  out_ << format_double(value);
}

void CsvWriter::cell(long long value) {
  separator();
  out_ << value;
}

void CsvWriter::cell_fixed(double value, int decimals) {
  separator();
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  out_ << buf;
}

void CsvWriter::end_row() { out_ << '\n'; }

}  // namespace magnet
