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


#include "cdp/pipeline.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>

#include "cdp/render.h"
#include "cdp/scm_io.h"
#include "json.hpp"

namespace cdp {
namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// Typed, strict access to one JSON object; Finish() rejects unread keys.
class Reader {
 public:
  Reader(const Json& json, std::string where)
      : json_(json), where_(std::move(where)) {
    if (!json_.is_object()) Fail(where_ + " must be an object");
  }

  bool Has(const std::string& key) const { return json_.contains(key); }

  const Json& Get(const std::string& key) {
    used_.insert(key);
    return json_.at(key);
  }

  std::string String(const std::string& key, std::string fallback = "") {
    if (!Has(key)) return fallback;
    const Json& v = Get(key);
    if (!v.is_string()) Fail(Path(key) + " must be a string");
    return v.get<std::string>();
  }

  double Number(const std::string& key, double fallback) {
    if (!Has(key)) return fallback;
    const Json& v = Get(key);
    if (!v.is_number()) Fail(Path(key) + " must be a number");
    return v.get<double>();
  }

  long long Integer(const std::string& key, long long fallback) {
    if (!Has(key)) return fallback;
    const Json& v = Get(key);
    if (!v.is_number_integer()) Fail(Path(key) + " must be an integer");
    return v.get<long long>();
  }

  bool Bool(const std::string& key, bool fallback) {
    if (!Has(key)) return fallback;
    const Json& v = Get(key);
    if (!v.is_boolean()) Fail(Path(key) + " must be true or false");
    return v.get<bool>();
  }

  std::vector<std::string> Strings(const std::string& key) {
    std::vector<std::string> out;
    if (!Has(key)) return out;
    const Json& v = Get(key);
    if (!v.is_array()) Fail(Path(key) + " must be a list of strings");
    for (const Json& item : v) {
      if (!item.is_string()) Fail(Path(key) + " must be a list of strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  std::vector<PlotKind> Kinds(const std::string& key) {
    std::vector<PlotKind> out;
    for (const std::string& name : Strings(key)) {
      try {
        out.push_back(PlotKindFromName(name));
      } catch (const ValidationError& e) {
        Fail(Path(key) + ": " + e.what());
      }
    }
    return out;
  }

  std::string Path(const std::string& key) const {
    return where_.empty() ? "'" + key + "'" : where_ + "." + key;
  }

  void Finish() const {
    for (auto it = json_.begin(); it != json_.end(); ++it) {
      if (!used_.count(it.key())) Fail("unknown key " + Path(it.key()));
    }
  }

  [[noreturn]] static void Fail(const std::string& message) {
    throw ValidationError("config: " + message);
  }

 private:
  const Json& json_;
  std::string where_;
  std::set<std::string> used_;
};

PredictorConfig ParsePredictor(const Json& json, std::size_t index,
                               std::uint64_t seed) {
  Reader r(json, "predictors[" + std::to_string(index) + "]");
  PredictorConfig p;
  p.name = r.String("name");
  const std::string kind = r.String("kind");
  p.features = r.Strings("features");
  if (kind == "ols") {
    p.kind = PredictorKind::kOls;
    p.degree = static_cast<int>(r.Integer("degree", 1));
  } else if (kind == "forest") {
    p.kind = PredictorKind::kForest;
    p.forest.trees = static_cast<int>(r.Integer("trees", p.forest.trees));
    p.forest.max_depth =
        static_cast<int>(r.Integer("max_depth", p.forest.max_depth));
    p.forest.min_leaf =
        static_cast<int>(r.Integer("min_leaf", p.forest.min_leaf));
    p.forest.features_per_split = static_cast<int>(
        r.Integer("features_per_split", p.forest.features_per_split));
    p.forest.bootstrap = r.Bool("bootstrap", p.forest.bootstrap);
    p.forest_seed_set = r.Has("seed");
    p.forest.seed = static_cast<std::uint64_t>(
        r.Integer("seed", static_cast<long long>(seed)));
  } else if (kind == "closed_form") {
    p.kind = PredictorKind::kClosedForm;
    p.equation = r.String("equation");
  } else if (kind == "external") {
    p.kind = PredictorKind::kExternal;
    p.command = r.String("command");
    p.timeout_ms = static_cast<int>(r.Integer("timeout_ms", p.timeout_ms));
  } else {
    Reader::Fail(r.Path("kind") + " must be ols, forest, closed_form or "
                 "external, got '" + kind + "'");
  }
  r.Finish();
  return p;
}

CandidateConfig ParseCandidate(const Json& json, std::size_t index) {
  const std::string where = "bands.candidates[" + std::to_string(index) + "]";
  CandidateConfig c;
  if (json.is_string()) {
    c.scm_path = json.get<std::string>();
    c.label = fs::path(c.scm_path).stem().string();
    return c;
  }
  Reader r(json, where);
  c.scm_path = r.String("scm");
  if (r.Has("dag")) {
    const long long dag = r.Integer("dag", 0);
    if (dag < 0) Reader::Fail(r.Path("dag") + " must be >= 0");
    c.dag = static_cast<std::size_t>(dag);
  }
  c.remove_edge = r.Strings("remove_edge");
  c.label = r.String("label");
  r.Finish();
  if (c.label.empty()) {
    if (!c.scm_path.empty()) {
      c.label = fs::path(c.scm_path).stem().string();
    } else if (c.dag) {
      c.label = "dag" + std::to_string(*c.dag);
      if (c.remove_edge.size() == 2) {
        c.label += "-no-" + c.remove_edge[0] + "-" + c.remove_edge[1];
      }
    }
  }
  return c;
}

std::string Resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

bool IsFileName(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '-' || c == '.';
  });
}

template <typename F>
auto InStage(const std::string& stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.code(), e.what());
  } catch (const Json::exception& e) {
    throw StageError(stage, ErrorCode::kConfig, e.what());
  } catch (const fs::filesystem_error& e) {
    throw StageError(stage, ErrorCode::kData, e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, ErrorCode::kCompute, e.what());
  }
}

// Files written by one run; removed again if the run fails.
class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {}

  void Open() {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_ = true;
    } else if (!fs::is_directory(dir_)) {
      throw DataError("output path '" + dir_ + "' is not a directory");
    }
  }

  void Write(const std::string& name, std::string_view contents) {
    if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
      throw ValidationError("output '" + name + "' would be written twice");
    }
    names_.push_back(name);
    WriteFile((fs::path(dir_) / name).string(), contents);
  }

  void Rollback() noexcept {
    std::error_code ec;
    for (const std::string& name : names_) fs::remove(fs::path(dir_) / name, ec);
    if (created_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  const std::string& dir() const { return dir_; }
  std::vector<std::string> Sorted() const {
    std::vector<std::string> out = names_;
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::string dir_;
  bool created_ = false;
  std::vector<std::string> names_;
};

std::string KindTitle(PlotKind kind) {
  std::string title(PlotKindName(kind));
  for (char& ch : title) {
    ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return title;
}

Json CpdagLines(const std::string& text) {
  Json lines = Json::array();
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    lines.push_back(text.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::uint64_t Fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HexDigest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

void RunConfig::Validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("config: " + m); };
  if (scm_path.empty() == !discovery.has_value()) {
    fail("exactly one of 'scm' and 'discovery' is required");
  }
  if (data_path.empty() == (simulate == 0)) {
    fail("exactly one of 'data' and 'simulate' is required");
  }
  if (simulate > 0 && discovery) fail("'simulate' needs an 'scm', not discovery");
  if (plots.empty()) fail("'plots' must not be empty");
  if (variables.empty()) fail("'variables' must not be empty");
  if (predictors.empty()) fail("'predictors' must not be empty");
  if (grid < 2) fail("'grid' must be >= 2");
  if (threads < 1) fail("'threads' must be >= 1");
  std::set<std::string> names;
  for (const PredictorConfig& p : predictors) {
    if (!IsFileName(p.name)) {
      fail("predictor name '" + p.name +
           "' must be nonempty and use only letters, digits, '_', '-' or '.'");
    }
    if (!names.insert(p.name).second) {
      fail("duplicate predictor name '" + p.name + "'");
    }
    if ((p.kind == PredictorKind::kOls || p.kind == PredictorKind::kForest) &&
        target.empty()) {
      fail("predictor '" + p.name + "' is trained and needs a 'target'");
    }
    if (p.kind == PredictorKind::kClosedForm && p.equation.empty()) {
      fail("predictor '" + p.name + "' needs an 'equation'");
    }
    if (p.kind == PredictorKind::kExternal && p.command.empty()) {
      fail("predictor '" + p.name + "' needs a 'command'");
    }
    if (p.kind == PredictorKind::kExternal && p.timeout_ms <= 0) {
      fail("predictor '" + p.name + "' needs a positive 'timeout_ms'");
    }
    if (p.kind == PredictorKind::kOls && p.degree < 1) {
      fail("predictor '" + p.name + "' needs degree >= 1");
    }
    if (p.kind == PredictorKind::kForest) p.forest.Validate();
  }
  for (const std::string& v : variables) {
    if (!IsFileName(v)) fail("bad variable name '" + v + "'");
  }
  if (std::find(plots.begin(), plots.end(), PlotKind::kPcdp) != plots.end()) {
    for (const std::string& v : variables) {
      if (!controls.count(v)) {
        fail("pcdp requested but 'controls' has no entry for '" + v + "'");
      }
    }
  }
  if (!band_kinds.empty() && band_candidates.size() < 2) {
    fail("bands need at least two candidates");
  }
  for (PlotKind k : band_kinds) {
    if (k != PlotKind::kTdp && k != PlotKind::kNddp && k != PlotKind::kNidp) {
      fail("band kinds must be tdp, nddp or nidp");
    }
  }
  for (const CandidateConfig& c : band_candidates) {
    if (c.scm_path.empty() == !c.dag.has_value()) {
      fail("band candidate '" + c.label + "' needs exactly one of scm or dag");
    }
    if (c.dag && !discovery) {
      fail("band candidate '" + c.label + "' refers to a DAG without discovery");
    }
    if (!c.remove_edge.empty() && (c.remove_edge.size() != 2 || !c.dag)) {
      fail("remove_edge needs a dag candidate and two variable names");
    }
  }
  if (discovery) {
    if (!(discovery->alpha > 0.0 && discovery->alpha < 1.0)) {
      fail("discovery.alpha must be in (0, 1)");
    }
    if (discovery->max_cond < 0) fail("discovery.max_cond must be >= 0");
    if (discovery->degree < 1) fail("discovery.degree must be >= 1");
    if (discovery->cap < 1) fail("discovery.cap must be >= 1");
  }
}

RunConfig ParseRunConfig(std::string_view text, std::string base_dir) {
  Json json;
  try {
    json = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(),
                     e.byte);
  }
  RunConfig c;
  c.base_dir = std::move(base_dir);
  c.canonical = json.dump();
  Reader r(json, "");
  c.name = r.String("name", c.name);
  c.scm_path = r.String("scm");
  c.seed = static_cast<std::uint64_t>(r.Integer("seed", 0));
  if (r.Has("discovery")) {
    Reader d(r.Get("discovery"), "discovery");
    DiscoveryConfig dc;
    dc.alpha = d.Number("alpha", dc.alpha);
    dc.max_cond = static_cast<int>(d.Integer("max_cond", dc.max_cond));
    dc.degree = static_cast<int>(d.Integer("degree", dc.degree));
    dc.columns = d.Strings("columns");
    dc.exclude = d.Strings("exclude");
    const long long index = d.Integer("dag_index", 0);
    const long long cap = d.Integer("cap", 64);
    if (index < 0 || cap < 1) {
      Reader::Fail("discovery.dag_index must be >= 0 and discovery.cap >= 1");
    }
    dc.dag_index = static_cast<std::size_t>(index);
    dc.cap = static_cast<std::size_t>(cap);
    d.Finish();
    c.discovery = dc;
  }
  c.data_path = r.String("data");
  const long long simulate = r.Integer("simulate", 0);
  if (simulate < 0) Reader::Fail("'simulate' must be >= 0");
  c.simulate = static_cast<std::size_t>(simulate);
  c.explain_data_path = r.String("explain_data");
  if (r.Has("label_map")) {
    const Json& labels = r.Get("label_map");
    if (!labels.is_object()) Reader::Fail("'label_map' must be an object");
    for (auto col = labels.begin(); col != labels.end(); ++col) {
      if (!col->is_object()) {
        Reader::Fail("label_map." + col.key() + " must map text to numbers");
      }
      for (auto cell = col->begin(); cell != col->end(); ++cell) {
        if (!cell->is_number()) {
          Reader::Fail("label_map." + col.key() + "." + cell.key() +
                       " must be a number");
        }
        c.labels[col.key()][cell.key()] = cell->get<double>();
      }
    }
  }
  c.target = r.String("target");
  if (r.Has("predictors")) {
    const Json& list = r.Get("predictors");
    if (!list.is_array()) Reader::Fail("'predictors' must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      c.predictors.push_back(ParsePredictor(list[i], i, c.seed));
    }
  }
  c.variables = r.Strings("variables");
  c.plots = r.Kinds("plots");
  c.grid = static_cast<int>(r.Integer("grid", c.grid));
  if (r.Has("controls")) {
    const Json& controls = r.Get("controls");
    if (!controls.is_object()) Reader::Fail("'controls' must be an object");
    for (auto var = controls.begin(); var != controls.end(); ++var) {
      if (!var->is_object()) {
        Reader::Fail("controls." + var.key() + " must map variables to numbers");
      }
      auto& control = c.controls[var.key()];
      for (auto set = var->begin(); set != var->end(); ++set) {
        if (!set->is_number()) {
          Reader::Fail("controls." + var.key() + "." + set.key() +
                       " must be a number");
        }
        control[set.key()] = set->get<double>();
      }
    }
  }
  if (r.Has("bands")) {
    Reader b(r.Get("bands"), "bands");
    c.band_kinds = b.Kinds("kinds");
    if (b.Has("candidates")) {
      const Json& list = b.Get("candidates");
      if (!list.is_array()) Reader::Fail("bands.candidates must be a list");
      for (std::size_t i = 0; i < list.size(); ++i) {
        c.band_candidates.push_back(ParseCandidate(list[i], i));
      }
    }
    b.Finish();
  }
  c.output_dir = r.String("output", c.output_dir);
  c.threads = static_cast<int>(r.Integer("threads", c.threads));
  r.Finish();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  const std::string text = ReadFile(path);
  std::string base = fs::path(path).parent_path().string();
  if (base.empty()) base = ".";
  return ParseRunConfig(text, base);
}

RunResult Run(const RunConfig& c) {
  InStage("config", [&] { c.Validate(); });
  Outputs out(Resolve(c.base_dir, c.output_dir));
  try {
    InStage("write", [&] { out.Open(); });
    Json manifest;
    manifest["name"] = c.name;
    manifest["seed"] = c.seed;
    manifest["config_hash"] = HexDigest(Fnv1a64(c.canonical));
    Json inputs = Json::object();
    Json deviations = Json::array();

    Dataset data;
    if (!c.data_path.empty()) {
      data = InStage("ingest", [&] {
        return ReadCsv(Resolve(c.base_dir, c.data_path), c.labels);
      });
      inputs["data"] = c.data_path;
      inputs["data_fnv1a64"] = HexDigest(
          Fnv1a64(ReadFile(Resolve(c.base_dir, c.data_path))));
    }

    Scm scm;
    std::vector<Dag> dags;
    const DiscoveryConfig* dc = c.discovery ? &*c.discovery : nullptr;
    auto fit_dag = [&](Dag dag, const std::string& name) {
      for (const std::string& v : dc->exclude) {
        if (std::find(dag.variables.begin(), dag.variables.end(), v) !=
            dag.variables.end()) {
          dag = DropVariable(std::move(dag), v);
        }
      }
      return FitAnm(dag, data, dc->degree, name);
    };
    if (!c.scm_path.empty()) {
      scm = InStage("load-scm",
                    [&] { return LoadScm(Resolve(c.base_dir, c.scm_path)); });
      inputs["scm"] = c.scm_path;
    } else {
      scm = InStage("discovery", [&] {
        const Dataset learn = dc->columns.empty()
                                  ? data
                                  : data.Select(dc->columns);
        const SkeletonResult skeleton =
            PcSkeleton(learn, dc->alpha, dc->max_cond);
        const Cpdag cpdag = OrientCpdag(skeleton.skeleton, skeleton.sepsets);
        const DagEnumeration found = EnumerateDags(cpdag, dc->cap);
        dags = found.dags;
        if (dc->dag_index >= dags.size()) {
          throw ValidationError("discovery.dag_index " +
                                std::to_string(dc->dag_index) + " but only " +
                                std::to_string(dags.size()) +
                                " DAG(s) are consistent with the CPDAG");
        }
        Json info;
        info["alpha"] = dc->alpha;
        info["max_cond"] = dc->max_cond;
        info["degree"] = dc->degree;
        info["tests"] = skeleton.tests;
        info["cpdag"] = CpdagLines(cpdag.ToText());
        info["conflicts"] = cpdag.conflicts();
        info["dag_count"] = dags.size();
        info["truncated"] = found.truncated;
        info["dag_index"] = dc->dag_index;
        info["dag"] = CpdagLines(dags[dc->dag_index].ToText());
        info["excluded"] = dc->exclude;
        manifest["discovery"] = info;
        return fit_dag(dags[dc->dag_index],
                       "anm_dag" + std::to_string(dc->dag_index));
      });
      manifest["discovery"]["scm"] = FormatScm(scm);
    }

    if (c.simulate > 0) {
      data = InStage("simulate", [&] { return Sample(scm, c.simulate, c.seed).data; });
      inputs["data"] = "simulated(n=" + std::to_string(c.simulate) +
                       ", seed=" + std::to_string(c.seed) + ")";
    }
    Dataset explain = data;
    if (!c.explain_data_path.empty()) {
      explain = InStage("ingest", [&] {
        return ReadCsv(Resolve(c.base_dir, c.explain_data_path), c.labels);
      });
      inputs["explain_data"] = c.explain_data_path;
    }
    manifest["inputs"] = inputs;

    std::vector<Ecm> ecms;
    Json predictor_info = Json::array();
    InStage("fit", [&] {
      for (const PredictorConfig& p : c.predictors) {
        std::vector<std::string> features = p.features;
        if (features.empty() && p.kind != PredictorKind::kClosedForm) {
          for (const std::string& v : scm.variables()) {
            if (v != c.target) features.push_back(v);
          }
        }
        PredictorPtr predictor;
        switch (p.kind) {
          case PredictorKind::kOls: {
            auto ols = FitOls(data, c.target, features, p.degree);
            if (ols->ridge_used()) {
              deviations.push_back("predictor '" + p.name +
                                   "': ill-conditioned design, solved with "
                                   "ridge 1e-8");
            }
            predictor = ols;
            break;
          }
          case PredictorKind::kForest:
            predictor = FitForest(data, c.target, features, p.forest);
            break;
          case PredictorKind::kClosedForm:
            predictor = MakeClosedForm(p.equation, features);
            break;
          case PredictorKind::kExternal:
            predictor = OpenExternal(
                p.command, features,
                {std::chrono::milliseconds(p.timeout_ms)});
            break;
        }
        Json info;
        info["name"] = p.name;
        info["kind"] = std::string(PredictorKindName(p.kind));
        info["description"] = predictor->Describe();
        info["features"] = predictor->features();
        predictor_info.push_back(info);
        ecms.push_back(BuildEcm(scm, predictor, p.name));
      }
    });
    manifest["predictors"] = predictor_info;

    std::vector<Scm> candidates;
    InStage("candidates", [&] {
      for (const CandidateConfig& cand : c.band_candidates) {
        if (!cand.scm_path.empty()) {
          candidates.push_back(LoadScm(Resolve(c.base_dir, cand.scm_path)));
          continue;
        }
        if (*cand.dag >= dags.size()) {
          throw ValidationError("band candidate '" + cand.label +
                                "' refers to DAG " + std::to_string(*cand.dag) +
                                " of " + std::to_string(dags.size()));
        }
        Dag dag = dags[*cand.dag];
        if (!cand.remove_edge.empty()) {
          dag = RemoveEdge(std::move(dag), cand.remove_edge[0],
                           cand.remove_edge[1]);
        }
        candidates.push_back(fit_dag(std::move(dag), cand.label));
      }
    });

    const auto uses = [](const std::vector<PlotKind>& kinds, PlotKind k) {
      return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
    };
    if (uses(c.plots, PlotKind::kNidp) || uses(c.band_kinds, PlotKind::kNidp)) {
      deviations.push_back(
          "nidp: the second stage pins the explained variable to its observed "
          "value (the natural indirect contrast) rather than to the grid value");
    }

    const ComputeOptions options{c.threads};
    for (const std::string& var : c.variables) {
      const Grid grid =
          InStage("grid", [&] { return MakeGrid(explain, var, c.grid); });
      std::vector<std::vector<CurveSet>> figure;
      std::vector<std::string> row_labels;
      for (std::size_t k = 0; k < ecms.size(); ++k) {
        const std::string& pname = c.predictors[k].name;
        std::vector<CurveSet> row;
        for (PlotKind kind : c.plots) {
          Intervention control;
          if (kind == PlotKind::kPcdp) {
            for (const auto& [name, value] : c.controls.at(var)) {
              control.Add(SetConstant{name, value});
            }
          }
          CurveSet curves = InStage("compute", [&] {
            return ComputeCurves(kind, ecms[k], explain, var, grid, control,
                                 options);
          });
          curves.grid.variable = var;
          const std::string stem =
              pname + "_" + var + "_" + std::string(PlotKindName(kind));
          InStage("write", [&] {
            out.Write(stem + ".csv", ExportCsv(curves));
            PlotStyle style;
            style.title =
                KindTitle(kind) + " of " + var + " (" + pname + ")";
            out.Write(stem + ".svg", RenderCurves(curves, style));
          });
          row.push_back(std::move(curves));
        }
        figure.push_back(std::move(row));
        row_labels.push_back(pname);

        for (PlotKind kind : c.band_kinds) {
          BandSet band = InStage("compute", [&] {
            std::vector<Ecm> models;
            for (std::size_t j = 0; j < candidates.size(); ++j) {
              models.push_back(BuildEcm(candidates[j], ecms[k].predictor_ptr(),
                                        c.band_candidates[j].label));
            }
            return UncertaintyBand(models, explain, var, grid, kind, options);
          });
          band.grid.variable = var;
          const std::string stem = "band_" + pname + "_" + var + "_" +
                                   std::string(PlotKindName(kind));
          InStage("write", [&] {
            out.Write(stem + ".csv", ExportBandCsv(band));
            out.Write(stem + ".svg", RenderBand(band));
          });
        }
      }
      if (ecms.size() >= 2) {
        InStage("write", [&] {
          out.Write("grid_" + var + ".svg",
                    RenderCurveGrid(figure, row_labels));
        });
      }
    }

    manifest["deviations"] = deviations;
    std::vector<std::string> outputs = out.Sorted();
    outputs.push_back("manifest.json");
    std::sort(outputs.begin(), outputs.end());
    manifest["outputs"] = outputs;
    InStage("write", [&] { out.Write("manifest.json", manifest.dump(2) + "\n"); });
    return {out.dir(), outputs, manifest["config_hash"].get<std::string>()};
  } catch (...) {
    out.Rollback();
    throw;
  }
}

}  // namespace cdp
