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


// cdp: command-line front end.
//
//   cdp simulate --scm salary.scm --n 2000 --seed 7 --output salary.csv
//   cdp discover --data bc.csv --alpha 0.05 --output cpdag.txt
//   cdp fit      --data salary.csv --target S --kind ols --output model.json
//   cdp explain  --scm salary.scm --data salary.csv --predictor model.json
//                --variable P --plot tdp --output tdp.csv --svg tdp.svg
//   cdp render   --csv tdp.csv --output tdp.svg
//   cdp run      --config fixtures/salary.json --output out/

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdp/dataset.h"
#include "cdp/discovery.h"
#include "cdp/engine.h"
#include "cdp/error.h"
#include "cdp/pipeline.h"
#include "cdp/predictor.h"
#include "cdp/render.h"
#include "cdp/scm.h"
#include "cdp/scm_io.h"

namespace {

namespace fs = std::filesystem;

// "Class:benign=2" entries.
cdp::LabelMap ParseLabels(const std::vector<std::string>& entries) {
  cdp::LabelMap labels;
  for (const std::string& e : entries) {
    const auto colon = e.find(':');
    const auto eq = e.rfind('=');
    if (colon == std::string::npos || eq == std::string::npos || eq < colon) {
      throw cdp::ValidationError("--label expects COLUMN:TEXT=VALUE, got '" +
                                 e + "'");
    }
    const auto value = cdp::ParseDouble(e.substr(eq + 1));
    if (!value) {
      throw cdp::ValidationError("--label value is not a number in '" + e +
                                 "'");
    }
    labels[e.substr(0, colon)][e.substr(colon + 1, eq - colon - 1)] = *value;
  }
  return labels;
}

cdp::Intervention ParseControl(const std::vector<std::string>& entries) {
  cdp::Intervention control;
  for (const std::string& e : entries) {
    const auto eq = e.find('=');
    const auto value =
        eq == std::string::npos ? std::nullopt : cdp::ParseDouble(e.substr(eq + 1));
    if (!value) {
      throw cdp::ValidationError("--control expects NAME=VALUE, got '" + e + "'");
    }
    control.Add(cdp::SetConstant{e.substr(0, eq), *value});
  }
  return control;
}

void Emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    cdp::WriteFile(path, text);
  }
}

struct SimulateArgs {
  std::string scm;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string output;
  bool noise = false;
};

struct DiscoverArgs {
  std::string data;
  std::vector<std::string> labels;
  std::vector<std::string> columns;
  double alpha = cdp::kDefaultAlpha;
  int max_cond = cdp::kDefaultMaxCond;
  std::string output;
  bool dags = false;
  std::size_t cap = 64;
  int fit_dag = -1;
  std::vector<std::string> exclude;
  int degree = cdp::kDefaultAnmDegree;
  std::string scm_output;
};

struct FitArgs {
  std::string data;
  std::vector<std::string> labels;
  std::string target;
  std::string kind = "ols";
  std::vector<std::string> features;
  int degree = 1;
  cdp::ForestConfig forest;
  std::string equation;
  std::string command;
  int timeout_ms = 30000;
  std::string output;
};

struct ExplainArgs {
  std::string scm;
  std::string data;
  std::vector<std::string> labels;
  std::string predictor;
  std::string variable;
  std::string plot = "tdp";
  int grid = cdp::kDefaultGridResolution;
  std::vector<std::string> control;
  int threads = 1;
  std::string output;
  std::string svg;
};

struct RenderArgs {
  std::string csv;
  std::string variable;
  std::string output;
};

struct RunArgs {
  std::string config;
  std::string output;
  std::string explain_data;
  std::int64_t seed = -1;
  int threads = 0;
};

int Simulate(const SimulateArgs& a) {
  const cdp::Scm scm = cdp::LoadScm(a.scm);
  const cdp::SampleResult sample = cdp::Sample(scm, a.n, a.seed);
  Emit(a.output, cdp::FormatCsv(a.noise ? static_cast<const cdp::Dataset&>(
                                              sample.noise)
                                        : sample.data));
  return 0;
}

int Discover(const DiscoverArgs& a) {
  cdp::Dataset data = cdp::ReadCsv(a.data, ParseLabels(a.labels));
  if (!a.columns.empty()) data = data.Select(a.columns);
  const cdp::SkeletonResult skeleton =
      cdp::PcSkeleton(data, a.alpha, a.max_cond);
  const cdp::Cpdag cpdag = cdp::OrientCpdag(skeleton.skeleton, skeleton.sepsets);
  for (const std::string& c : cpdag.conflicts()) {
    std::cerr << "cdp: warning: " << c << "\n";
  }
  std::string text = cpdag.ToText();
  const cdp::DagEnumeration found = cdp::EnumerateDags(cpdag, a.cap);
  if (a.dags) {
    for (std::size_t k = 0; k < found.dags.size(); ++k) {
      text += "# dag " + std::to_string(k) + "\n" + found.dags[k].ToText();
    }
    if (found.truncated) text += "# truncated at " + std::to_string(a.cap) + "\n";
  }
  Emit(a.output, text);
  if (a.fit_dag >= 0) {
    const auto k = static_cast<std::size_t>(a.fit_dag);
    if (k >= found.dags.size()) {
      throw cdp::ValidationError("--fit-dag " + std::to_string(k) + " but only " +
                                 std::to_string(found.dags.size()) +
                                 " DAG(s) were found");
    }
    cdp::Dag dag = found.dags[k];
    for (const std::string& v : a.exclude) dag = cdp::DropVariable(dag, v);
    const cdp::Scm scm = cdp::FitAnm(dag, data, a.degree);
    Emit(a.scm_output, cdp::FormatScm(scm));
  }
  return 0;
}

int Fit(const FitArgs& a) {
  cdp::PredictorPtr predictor;
  if (a.kind == "closed_form") {
    predictor = cdp::MakeClosedForm(a.equation, a.features);
  } else if (a.kind == "external") {
    predictor = cdp::OpenExternal(a.command, a.features,
                                  {std::chrono::milliseconds(a.timeout_ms)});
  } else {
    const cdp::Dataset data = cdp::ReadCsv(a.data, ParseLabels(a.labels));
    std::vector<std::string> features = a.features;
    if (features.empty()) {
      for (const std::string& c : data.columns()) {
        if (c != a.target) features.push_back(c);
      }
    }
    if (a.kind == "ols") {
      predictor = cdp::FitOls(data, a.target, features, a.degree);
    } else if (a.kind == "forest") {
      predictor = cdp::FitForest(data, a.target, features, a.forest);
    } else {
      throw cdp::ValidationError("--kind must be ols, forest, closed_form or "
                                 "external, got '" + a.kind + "'");
    }
  }
  Emit(a.output, cdp::SavePredictor(*predictor));
  return 0;
}

int Explain(const ExplainArgs& a) {
  const cdp::PlotKind kind = cdp::PlotKindFromName(a.plot);
  const cdp::Scm scm = cdp::LoadScm(a.scm);
  const cdp::Dataset data = cdp::ReadCsv(a.data, ParseLabels(a.labels));
  const cdp::PredictorPtr predictor =
      cdp::LoadPredictor(cdp::ReadFile(a.predictor));
  const cdp::Ecm ecm = cdp::BuildEcm(scm, predictor);
  const cdp::Grid grid = cdp::MakeGrid(data, a.variable, a.grid);
  cdp::CurveSet curves =
      cdp::ComputeCurves(kind, ecm, data, a.variable, grid,
                         ParseControl(a.control), {a.threads});
  curves.grid.variable = a.variable;
  Emit(a.output, cdp::ExportCsv(curves));
  if (!a.svg.empty()) cdp::WriteFile(a.svg, cdp::RenderCurves(curves));
  return 0;
}

int Render(const RenderArgs& a) {
  cdp::CurveSet curves;
  try {
    curves = cdp::ParseCurveCsv(cdp::ReadFile(a.csv));
  } catch (const cdp::ParseError& e) {
    throw cdp::DataError(a.csv + ": " + e.what());
  }
  curves.grid.variable = a.variable;
  Emit(a.output, cdp::RenderCurves(curves));
  return 0;
}

int RunPipeline(const RunArgs& a) {
  cdp::RunConfig config = cdp::LoadRunConfig(a.config);
  if (!a.output.empty()) config.output_dir = fs::absolute(a.output).string();
  if (!a.explain_data.empty()) {
    config.explain_data_path = fs::absolute(a.explain_data).string();
  }
  if (a.seed >= 0) {
    config.seed = static_cast<std::uint64_t>(a.seed);
    for (cdp::PredictorConfig& p : config.predictors) {
      if (!p.forest_seed_set) p.forest.seed = config.seed;
    }
  }
  if (a.threads > 0) config.threads = a.threads;
  const cdp::RunResult result = cdp::Run(config);
  std::cout << "wrote " << result.outputs.size() << " file(s) to "
            << result.output_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal dependence plots for black-box predictors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cdp 0.1.0");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Sample data from an SCM");
  simulate->add_option("--scm", sim.scm, "SCM spec file")->required();
  simulate->add_option("--n", sim.n, "Number of units")->required();
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--output", sim.output, "CSV path (default stdout)");
  simulate->add_flag("--noise", sim.noise, "Write the sampled noise instead");

  DiscoverArgs disc;
  auto* discover = app.add_subcommand("discover", "Learn a CPDAG with PC");
  discover->add_option("--data", disc.data, "CSV file")->required();
  discover->add_option("--label", disc.labels, "COLUMN:TEXT=VALUE cell mapping");
  discover->add_option("--columns", disc.columns, "Columns to use")
      ->delimiter(',');
  discover->add_option("--alpha", disc.alpha, "Significance level");
  discover->add_option("--max-cond", disc.max_cond, "Largest conditioning set");
  discover->add_option("--output", disc.output, "CPDAG path (default stdout)");
  discover->add_flag("--dags", disc.dags, "Also list consistent DAGs");
  discover->add_option("--cap", disc.cap, "Most DAGs to enumerate");
  discover->add_option("--fit-dag", disc.fit_dag,
                       "Fit an additive-noise SCM on this DAG index");
  discover->add_option("--exclude", disc.exclude, "Variables dropped before fitting")
      ->delimiter(',');
  discover->add_option("--degree", disc.degree, "Polynomial degree of mechanisms");
  discover->add_option("--scm-output", disc.scm_output,
                       "Fitted SCM path (default stdout)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit or wrap a predictor");
  fit_cmd->add_option("--data", fit.data, "Training CSV");
  fit_cmd->add_option("--label", fit.labels, "COLUMN:TEXT=VALUE cell mapping");
  fit_cmd->add_option("--target", fit.target, "Target column");
  fit_cmd->add_option("--kind", fit.kind, "ols, forest, closed_form or external");
  fit_cmd->add_option("--features", fit.features, "Feature columns")
      ->delimiter(',');
  fit_cmd->add_option("--degree", fit.degree, "OLS polynomial degree");
  fit_cmd->add_option("--trees", fit.forest.trees, "Forest size");
  fit_cmd->add_option("--max-depth", fit.forest.max_depth, "Tree depth limit");
  fit_cmd->add_option("--min-leaf", fit.forest.min_leaf, "Smallest leaf");
  fit_cmd->add_option("--seed", fit.forest.seed, "Forest seed");
  fit_cmd->add_option("--equation", fit.equation, "Closed-form expression");
  fit_cmd->add_option("--command", fit.command, "External predictor command");
  fit_cmd->add_option("--timeout-ms", fit.timeout_ms, "External reply deadline");
  fit_cmd->add_option("--output", fit.output, "Model JSON path (default stdout)");

  ExplainArgs exp;
  auto* explain = app.add_subcommand("explain", "Compute one dependence plot");
  explain->add_option("--scm", exp.scm, "SCM spec file")->required();
  explain->add_option("--data", exp.data, "Explanatory CSV")->required();
  explain->add_option("--label", exp.labels, "COLUMN:TEXT=VALUE cell mapping");
  explain->add_option("--predictor", exp.predictor, "Model JSON")->required();
  explain->add_option("--variable", exp.variable, "Variable to vary")->required();
  explain->add_option("--plot", exp.plot, "ice, tdp, pcdp, nddp or nidp");
  explain->add_option("--grid", exp.grid, "Grid resolution");
  explain->add_option("--control", exp.control, "NAME=VALUE for pcdp");
  explain->add_option("--threads", exp.threads, "Worker threads");
  explain->add_option("--output", exp.output, "CSV path (default stdout)");
  explain->add_option("--svg", exp.svg, "Also write an SVG figure");

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "Draw a curve CSV as SVG");
  render->add_option("--csv", ren.csv, "Curve CSV")->required();
  render->add_option("--variable", ren.variable, "Axis label for the grid");
  render->add_option("--output", ren.output, "SVG path (default stdout)");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a JSON-configured pipeline");
  run_cmd->add_option("--config", run.config, "Run config")->required();
  run_cmd->add_option("--output", run.output, "Output directory override");
  run_cmd->add_option("--explain-data", run.explain_data,
                      "Explanatory CSV override");
  run_cmd->add_option("--seed", run.seed, "Master seed override");
  run_cmd->add_option("--threads", run.threads, "Worker threads override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(cdp::ErrorCode::kConfig);
  }

  try {
    if (*simulate) return Simulate(sim);
    if (*discover) return Discover(disc);
    if (*fit_cmd) return Fit(fit);
    if (*explain) return Explain(exp);
    if (*render) return Render(ren);
    if (*run_cmd) return RunPipeline(run);
  } catch (const cdp::Error& e) {
    std::cerr << "cdp: error (" << cdp::ErrorCodeName(e.code())
              << "): " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "cdp: error: " << e.what() << "\n";
    return static_cast<int>(cdp::ErrorCode::kCompute);
  }
  return 0;
}
