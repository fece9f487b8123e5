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


// Test peer for the external predictor protocol. Replies with the sum of each
// row's fields. Other modes misbehave on purpose:
//
//   sum            well-behaved (default)
//   wrong-rows     answers PREDICT n with n + 1 lines
//   hang           never answers PREDICT
//   crash          exits with status 3 on PREDICT
//   bad-handshake  answers HELLO with something other than READY

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

namespace {

double RowSum(const std::string& line) {
  double sum = 0.0;
  std::stringstream cells(line);
  std::string cell;
  while (std::getline(cells, cell, ',')) sum += std::strtod(cell.c_str(), nullptr);
  return sum;
}

void Emit(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g\n", value);
  std::fputs(buf, stdout);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "sum";
  std::string line;
  if (!std::getline(std::cin, line) || line.rfind("HELLO CDP/1 ", 0) != 0) {
    return 2;
  }
  std::fputs(mode == "bad-handshake" ? "HELLO?\n" : "READY\n", stdout);
  std::fflush(stdout);
  while (std::getline(std::cin, line)) {
    if (line == "QUIT") return 0;
    if (line.rfind("PREDICT ", 0) != 0) return 2;
    const long n = std::strtol(line.c_str() + 8, nullptr, 10);
    if (mode == "crash") return 3;
    std::string out;
    double last = 0.0;
    for (long i = 0; i < n; ++i) {
      if (!std::getline(std::cin, line)) return 2;
      last = RowSum(line);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g\n", last);
      out += buf;
    }
    if (mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
      return 0;
    }
    std::fputs(out.c_str(), stdout);
    if (mode == "wrong-rows") Emit(last);
    std::fflush(stdout);
  }
  return 0;
}
