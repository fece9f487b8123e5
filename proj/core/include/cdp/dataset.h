/*
 * Copyright 2026 The CDP Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CDP_DATASET_H_
#define CDP_DATASET_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdp {

// Dense row-major table of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Named numeric table: the explanatory / training data. Rectangular, all
// values finite, column names unique (checked on construction, DataError).
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> columns, Matrix values);

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }
  const std::vector<std::string>& columns() const { return columns_; }
  const Matrix& values() const { return values_; }

  std::optional<std::size_t> FindColumn(std::string_view name) const;
  // Throws DataError naming the missing column.
  std::size_t ColumnIndex(std::string_view name) const;
  bool HasColumn(std::string_view name) const {
    return FindColumn(name).has_value();
  }

  double operator()(std::size_t r, std::size_t c) const {
    return values_(r, c);
  }
  std::span<const double> row(std::size_t r) const { return values_.row(r); }
  std::vector<double> Column(std::string_view name) const;

  // Columns in the given order; throws DataError if any is missing.
  Dataset Select(std::span<const std::string> names) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<std::string> columns_;
  Matrix values_;
};

// Per-unit abducted (or sampled) exogenous noise, one column per SCM variable.
class NoiseDataset : public Dataset {
 public:
  using Dataset::Dataset;
};

// Maps non-numeric cell text to numbers, per column (e.g. Class: benign -> 2).
using LabelMap = std::map<std::string, std::map<std::string, double>,
                          std::less<>>;

// CSV: UTF-8, comma separated, header row, '.' decimal point, no quoting.
// Non-numeric cells are a DataError unless covered by `labels`.
Dataset ParseCsv(std::string_view text, const LabelMap& labels = {});
Dataset ReadCsv(const std::string& path, const LabelMap& labels = {});

// Values are written with 17 significant digits so they round-trip exactly.
std::string FormatCsv(const Dataset& data);
void WriteCsv(const std::string& path, const Dataset& data);

// Shortest decimal text that parses back to exactly `value`.
std::string FormatDouble(double value);
// Fixed 17-significant-digit form used by the CSV and wire formats.
std::string FormatDouble17(double value);
// Strict full-string parse; nullopt for anything but a finite number.
std::optional<double> ParseDouble(std::string_view text);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view contents);

}  // namespace cdp

#endif  // CDP_DATASET_H_
