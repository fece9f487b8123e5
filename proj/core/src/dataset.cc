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

#include "cdp/dataset.h"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cdp/error.h"

namespace cdp {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(Trim(line.substr(start)));
      return fields;
    }
    fields.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DataError("matrix data size " + std::to_string(data_.size()) +
                    " does not match " + std::to_string(rows_) + "x" +
                    std::to_string(cols_));
  }
}

Dataset::Dataset(std::vector<std::string> columns, Matrix values)
    : columns_(std::move(columns)), values_(std::move(values)) {
  if (columns_.size() != values_.cols()) {
    throw DataError("dataset has " + std::to_string(columns_.size()) +
                    " column names but " + std::to_string(values_.cols()) +
                    " columns");
  }
  std::set<std::string_view> seen;
  for (const std::string& name : columns_) {
    if (name.empty()) throw DataError("empty column name");
    if (!seen.insert(name).second) {
      throw DataError("duplicate column '" + name + "'");
    }
  }
  for (std::size_t r = 0; r < values_.rows(); ++r) {
    for (std::size_t c = 0; c < values_.cols(); ++c) {
      if (!std::isfinite(values_(r, c))) {
        throw DataError("non-finite value in column '" + columns_[c] +
                        "' at row " + std::to_string(r));
      }
    }
  }
}

std::optional<std::size_t> Dataset::FindColumn(std::string_view name) const {
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c] == name) return c;
  }
  return std::nullopt;
}

std::size_t Dataset::ColumnIndex(std::string_view name) const {
  const auto index = FindColumn(name);
  if (!index) {
    throw DataError("missing column '" + std::string(name) + "'");
  }
  return *index;
}

std::vector<double> Dataset::Column(std::string_view name) const {
  const std::size_t c = ColumnIndex(name);
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = values_(r, c);
  return out;
}

Dataset Dataset::Select(std::span<const std::string> names) const {
  std::vector<std::size_t> index;
  index.reserve(names.size());
  for (const std::string& name : names) index.push_back(ColumnIndex(name));
  Matrix out(rows(), names.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < index.size(); ++c) {
      out(r, c) = values_(r, index[c]);
    }
  }
  return Dataset(std::vector<std::string>(names.begin(), names.end()),
                 std::move(out));
}

std::string FormatDouble(double value) {
  std::array<char, 64> buf;
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), result.ptr);
}

std::string FormatDouble17(double value) {
  std::array<char, 64> buf;
  const auto result =
      std::to_chars(buf.data(), buf.data() + buf.size(), value,
                    std::chars_format::general, 17);
  return std::string(buf.data(), result.ptr);
}

std::optional<double> ParseDouble(std::string_view text) {
  text = Trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

Dataset ParseCsv(std::string_view text, const LabelMap& labels) {
  std::vector<std::string> columns;
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (Trim(line).empty()) continue;
    const std::vector<std::string_view> fields = SplitFields(line);
    if (columns.empty()) {
      for (std::string_view f : fields) columns.emplace_back(f);
      continue;
    }
    if (fields.size() != columns.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(columns.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (const auto v = ParseDouble(fields[c])) {
        values.push_back(*v);
        continue;
      }
      const auto map = labels.find(columns[c]);
      if (map != labels.end()) {
        const auto hit = map->second.find(std::string(fields[c]));
        if (hit != map->second.end()) {
          values.push_back(hit->second);
          continue;
        }
      }
      throw DataError("line " + std::to_string(line_no) + ", column '" +
                      columns[c] + "': non-numeric value '" +
                      std::string(fields[c]) + "'");
    }
    ++rows;
  }
  if (columns.empty()) throw DataError("CSV has no header row");
  const std::size_t cols = columns.size();
  return Dataset(std::move(columns), Matrix(rows, cols, std::move(values)));
}

Dataset ReadCsv(const std::string& path, const LabelMap& labels) {
  return ParseCsv(ReadFile(path), labels);
}

std::string FormatCsv(const Dataset& data) {
  std::string out;
  for (std::size_t c = 0; c < data.cols(); ++c) {
    if (c > 0) out += ',';
    out += data.columns()[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      if (c > 0) out += ',';
      out += FormatDouble17(data(r, c));
    }
    out += '\n';
  }
  return out;
}

void WriteCsv(const std::string& path, const Dataset& data) {
  WriteFile(path, FormatCsv(data));
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace cdp
