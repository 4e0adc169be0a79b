// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal CSV reading and writing: comma separated, no quoting, UTF-8,
// '.' decimal separator.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace magnet {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// First line is the header. Trailing '\r' is stripped; blank lines skipped.
CsvTable read_csv(const std::filesystem::path& path);

// Parses a numeric cell; "", "NA", "NaN" and "nan" become quiet NaN.
double parse_cell(const std::string& cell, const std::filesystem::path& source);

std::vector<std::string> split_csv_line(const std::string& line);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void row(const std::vector<std::string>& cells);
  void begin_row();
  void cell(const std::string& text);
  void cell(const char* text) { cell(std::string(text)); }
  // Shortest text that reads back to the same double.
  void cell(double value);
  void cell(long long value);
  void cell_fixed(double value, int decimals);
  void end_row();

 private:
  void separator();
  std::ofstream out_;
  bool first_ = true;
};

// "%.17g"-style round-trip formatting.
std::string format_double(double value);

}  // namespace magnet
