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

#include "cdp/error.h"

namespace cdp {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
      return "config error";
    case ErrorCode::kData:
      return "data error";
    case ErrorCode::kCompute:
      return "compute error";
    case ErrorCode::kExternal:
      return "external predictor error";
  }
  return "error";
}

ParseError::ParseError(const std::string& message, std::size_t offset,
                       std::size_t line)
    : Error(ErrorCode::kConfig,
            line > 0 ? "line " + std::to_string(line) + ": " + message
                     : message + " (at byte " + std::to_string(offset) + ")"),
      offset_(offset),
      line_(line) {}

}  // namespace cdp
