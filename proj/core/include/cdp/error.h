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

#ifndef CDP_ERROR_H_
#define CDP_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdp {

// Error categories. The numeric values are the process exit codes used by the
// command-line tool.
enum class ErrorCode : int {
  kConfig = 2,
  kData = 3,
  kCompute = 4,
  kExternal = 5,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Malformed input text (expressions, SCM files, CPDAG files, configs).
class ParseError : public Error {
 public:
  // `offset` is a byte offset into the parsed text, `line` is 1-based (0 when
  // the input is a single expression).
  ParseError(const std::string& message, std::size_t offset,
             std::size_t line = 0);

  std::size_t offset() const { return offset_; }
  std::size_t line() const { return line_; }

 private:
  std::size_t offset_;
  std::size_t line_;
};

// Structurally invalid model: cycles, undeclared parents, bad parameters.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorCode::kConfig, message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message)
      : Error(ErrorCode::kData, message) {}
};

// Numeric failure while evaluating mechanisms, fitting or propagating.
class ComputeError : public Error {
 public:
  explicit ComputeError(const std::string& message)
      : Error(ErrorCode::kCompute, message) {}
};

// Failure talking to an external predictor subprocess.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& message)
      : Error(ErrorCode::kExternal, message) {}
};

}  // namespace cdp

#endif  // CDP_ERROR_H_
