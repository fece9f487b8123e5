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


// End-to-end runs described by a JSON config: load or discover the SCM,
// ingest or simulate data, fit or connect predictors, compute the requested
// plots and write CSV/SVG files plus a manifest.

#ifndef CDP_PIPELINE_H_
#define CDP_PIPELINE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdp/dataset.h"
#include "cdp/discovery.h"
#include "cdp/engine.h"
#include "cdp/error.h"
#include "cdp/predictor.h"

namespace cdp {

struct DiscoveryConfig {
  double alpha = kDefaultAlpha;
  int max_cond = kDefaultMaxCond;
  int degree = kDefaultAnmDegree;
  // Columns to learn over; empty means every data column.
  std::vector<std::string> columns;
  // Learned, then dropped before mechanisms are fitted (e.g. the outcome).
  std::vector<std::string> exclude;
  std::size_t dag_index = 0;
  std::size_t cap = 64;
};

struct PredictorConfig {
  std::string name;
  PredictorKind kind = PredictorKind::kOls;
  // Empty means every SCM variable except the target.
  std::vector<std::string> features;
  int degree = 1;                   // ols
  ForestConfig forest;              // forest
  bool forest_seed_set = false;
  std::string equation;             // closed_form
  std::string command;              // external
  int timeout_ms = 30000;           // external
};

// An alternative model for uncertainty bands: an SCM file, or an enumerated
// DAG (optionally with one edge removed) fitted as an additive-noise model.
struct CandidateConfig {
  std::string label;
  std::string scm_path;
  std::optional<std::size_t> dag;
  std::vector<std::string> remove_edge;
};

struct RunConfig {
  std::string name = "run";
  // Relative paths are resolved against this directory.
  std::string base_dir = ".";

  std::string scm_path;
  std::optional<DiscoveryConfig> discovery;

  std::string data_path;
  std::size_t simulate = 0;
  std::string explain_data_path;
  LabelMap labels;
  std::string target;

  std::vector<PredictorConfig> predictors;
  std::vector<std::string> variables;
  std::vector<PlotKind> plots;
  int grid = kDefaultGridResolution;
  // PCDP control per explained variable: assigned variable -> value.
  std::map<std::string, std::map<std::string, double>> controls;

  std::vector<CandidateConfig> band_candidates;
  std::vector<PlotKind> band_kinds;

  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;

  // Normalized JSON of the parsed config; its hash goes in the manifest.
  std::string canonical;

  // ValidationError describing the first problem.
  void Validate() const;
};

// Unknown keys and wrong types are ValidationErrors naming the key.
RunConfig ParseRunConfig(std::string_view json, std::string base_dir = ".");
RunConfig LoadRunConfig(const std::string& path);

struct RunResult {
  std::string output_dir;
  // File names inside output_dir, sorted; includes manifest.json.
  std::vector<std::string> outputs;
  std::string config_hash;
};

// An error tagged with the pipeline stage that raised it. The code is the
// underlying error's.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorCode code, const std::string& message)
      : Error(code, "[" + stage + "] " + message), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Throws StageError; files written before the failure are removed.
RunResult Run(const RunConfig& config);

// 64-bit FNV-1a.
std::uint64_t Fnv1a64(std::string_view data);
std::string HexDigest(std::uint64_t value);

}  // namespace cdp

#endif  // CDP_PIPELINE_H_
