// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "magnet/errors.hpp"

namespace magnet {

// N x M modality availability matrix; entry (j, i) is 1 when patient j has
// modality i. Every row of a valid mask has at least one 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t rows, std::size_t cols, std::uint8_t fill = 1)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill) {}

  static BinaryMask from_rows(const std::vector<std::vector<int>>& rows) {
    BinaryMask m(rows.size(), rows.empty() ? 0 : rows.front().size(), 0);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (rows[j].size() != m.cols_) throw DimensionError("ragged mask rows");
      for (std::size_t i = 0; i < m.cols_; ++i) {
        if (rows[j][i] != 0 && rows[j][i] != 1) {
          throw DataError("mask entries must be 0 or 1");
        }
        m.set(j, i, rows[j][i] != 0);
      }
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool operator()(std::size_t j, std::size_t i) const {
    return bits_[j * cols_ + i] != 0;
  }
  void set(std::size_t j, std::size_t i, bool on) {
    bits_[j * cols_ + i] = on ? 1 : 0;
  }

  std::size_t row_count(std::size_t j) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < cols_; ++i) n += bits_[j * cols_ + i];
    return n;
  }
  std::size_t col_count(std::size_t i) const {
    std::size_t n = 0;
    for (std::size_t j = 0; j < rows_; ++j) n += bits_[j * cols_ + i];
    return n;
  }
  bool row_complete(std::size_t j) const { return row_count(j) == cols_; }

  bool shares_modality(std::size_t a, std::size_t b) const {
    for (std::size_t i = 0; i < cols_; ++i) {
      if (bits_[a * cols_ + i] && bits_[b * cols_ + i]) return true;
    }
    return false;
  }

  // Throws InvalidPatientError on the first all-zero row.
  void validate() const {
    for (std::size_t j = 0; j < rows_; ++j) {
      if (row_count(j) == 0) {
        throw InvalidPatientError("patient row " + std::to_string(j) +
                                  " has no available modality");
      }
    }
  }

  BinaryMask select_rows(const std::vector<std::size_t>& ids) const {
    BinaryMask out(ids.size(), cols_, 0);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      for (std::size_t i = 0; i < cols_; ++i) out.set(r, i, (*this)(ids[r], i));
    }
    return out;
  }

  double density() const {
    if (bits_.empty()) return 0.0;
    std::size_t on = 0;
    for (auto b : bits_) on += b;
    return static_cast<double>(on) / static_cast<double>(bits_.size());
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace magnet
