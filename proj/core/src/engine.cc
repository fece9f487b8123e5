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


#include "cdp/engine.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "cdp/error.h"

namespace cdp {
namespace {

// Runs fn(0..count-1), spread over `threads` workers. Each index must write
// to disjoint memory; the first exception is rethrown.
void ParallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct Units {
  Matrix observed;
  Matrix noise;
  std::size_t count() const { return observed.rows(); }
};

Units PrepareUnits(const Scm& scm, const Dataset& data) {
  if (data.rows() == 0) throw DataError("explanatory data has no rows");
  return {ObservedMatrix(scm, data), Abduct(scm, data).values()};
}

void CheckVariable(const Grid& grid, std::string_view variable) {
  grid.Validate();
  if (!grid.variable.empty() && grid.variable != variable) {
    throw ValidationError("grid is over '" + grid.variable + "', not '" +
                          std::string(variable) + "'");
  }
}

// Counterfactual states of every unit under `model`, one row per unit.
Matrix PropagateAll(const CounterfactualModel& model, const Units& units) {
  const std::size_t p = units.observed.cols();
  Matrix states(units.count(), p);
  for (std::size_t i = 0; i < units.count(); ++i) {
    model.Propagate(units.observed.row(i), units.noise.row(i), i, {},
                    states.row(i));
  }
  return states;
}

void WriteFeatureRows(const Ecm& ecm, const Matrix& states, std::size_t g,
                      Matrix& rows) {
  const std::size_t m = states.rows();
  const auto& index = ecm.feature_indices();
  for (std::size_t i = 0; i < m; ++i) {
    std::span<double> row = rows.row(g * m + i);
    for (std::size_t f = 0; f < index.size(); ++f) {
      row[f] = states(i, index[f]);
    }
  }
}

CurveSet Assemble(PlotKind kind, const Predictor& predictor, const Grid& grid,
                  std::size_t m, const Matrix& rows, CurveMetadata metadata) {
  const std::vector<double> predictions = predictor.Predict(rows);
  CurveSet out;
  out.kind = kind;
  out.grid = grid;
  out.values = Matrix(m, grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t i = 0; i < m; ++i) {
      out.values(i, g) = predictions[g * m + i];
    }
  }
  out.mean = ColumnMeans(out.values);
  out.metadata = std::move(metadata);
  return out;
}

// Shared driver: `fill(g, rows)` writes the m feature rows of grid point g.
CurveSet RunCounterfactual(
    PlotKind kind, const Ecm& ecm, const Units& units, const Grid& grid,
    const ComputeOptions& options, std::string intervention,
    std::vector<std::string> notes,
    const std::function<void(std::size_t, Matrix&)>& fill) {
  const std::size_t m = units.count();
  Matrix rows(m * grid.size(), ecm.feature_indices().size());
  ParallelFor(grid.size(), options.threads,
              [&](std::size_t g) { fill(g, rows); });
  return Assemble(kind, ecm.predictor(), grid, m, rows,
                  {ecm.scm().name(), ecm.predictor().Describe(),
                   std::move(intervention), std::move(notes)});
}

std::vector<std::string> ChildrenOf(const Ecm& ecm, std::string_view variable) {
  return ecm.scm().Children(variable);
}

std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += names[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> Ecm::Nodes() const {
  std::vector<std::string> nodes = scm_.variables();
  nodes.emplace_back(kPredictionNode);
  return nodes;
}

std::vector<std::string> Ecm::Parents(std::string_view node) const {
  if (node == kPredictionNode) return predictor_->features();
  return scm_.mechanism(node).parents;
}

std::vector<std::pair<std::string, std::string>> Ecm::Edges() const {
  std::vector<std::pair<std::string, std::string>> edges;
  for (const std::string& child : scm_.variables()) {
    for (const std::string& parent : scm_.mechanism(child).parents) {
      edges.emplace_back(parent, child);
    }
  }
  for (const std::string& f : predictor_->features()) {
    edges.emplace_back(f, std::string(kPredictionNode));
  }
  return edges;
}

Ecm BuildEcm(Scm scm, PredictorPtr predictor, std::string label) {
  if (!predictor) throw ValidationError("ECM needs a predictor");
  if (scm.Contains(kPredictionNode)) {
    throw ValidationError("SCM '" + scm.name() + "' already has a variable '" +
                          std::string(kPredictionNode) + "'");
  }
  Ecm ecm;
  for (const std::string& f : predictor->features()) {
    const auto index = scm.Find(f);
    if (!index) {
      throw ValidationError("predictor feature '" + f +
                            "' is not a variable of SCM '" + scm.name() + "'");
    }
    ecm.feature_indices_.push_back(*index);
  }
  if (label.empty()) label = scm.name() + "/" + predictor->Describe();
  ecm.scm_ = std::move(scm);
  ecm.predictor_ = std::move(predictor);
  ecm.label_ = std::move(label);
  return ecm;
}

void Grid::Validate() const {
  if (values.empty()) throw ValidationError("grid is empty");
  for (std::size_t g = 0; g < values.size(); ++g) {
    if (!std::isfinite(values[g])) {
      throw ValidationError("grid value is not finite");
    }
    if (g > 0 && !(values[g - 1] < values[g])) {
      throw ValidationError("grid values are not strictly increasing");
    }
  }
}

std::size_t Grid::Find(double x) const {
  const auto it = std::lower_bound(values.begin(), values.end(), x);
  if (it == values.end() || *it != x) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - values.begin());
}

Grid Grid::With(std::span<const double> extra) const {
  Grid out = *this;
  out.values.insert(out.values.end(), extra.begin(), extra.end());
  std::sort(out.values.begin(), out.values.end());
  out.values.erase(std::unique(out.values.begin(), out.values.end()),
                   out.values.end());
  return out;
}

Grid MakeGrid(const Dataset& data, std::string_view variable,
              int resolution) {
  if (resolution < 2) {
    throw ValidationError("grid resolution must be >= 2, got " +
                          std::to_string(resolution));
  }
  const std::vector<double> column = data.Column(variable);
  const std::set<double> distinct(column.begin(), column.end());
  if (distinct.size() < 2) {
    throw DataError("column '" + std::string(variable) +
                    "' is constant; no grid can span it");
  }
  Grid grid{std::string(variable), {}};
  if (distinct.size() <= kOrdinalCutoff) {
    grid.values.assign(distinct.begin(), distinct.end());
    return grid;
  }
  const double lo = *distinct.begin();
  const double hi = *distinct.rbegin();
  const auto steps = static_cast<double>(resolution - 1);
  for (int k = 0; k < resolution; ++k) {
    grid.values.push_back(k == resolution - 1
                              ? hi
                              : lo + (hi - lo) * static_cast<double>(k) / steps);
  }
  grid.values.erase(std::unique(grid.values.begin(), grid.values.end()),
                    grid.values.end());
  return grid;
}

std::string_view PlotKindName(PlotKind kind) {
  switch (kind) {
    case PlotKind::kIce:
      return "ice";
    case PlotKind::kTdp:
      return "tdp";
    case PlotKind::kPcdp:
      return "pcdp";
    case PlotKind::kNddp:
      return "nddp";
    case PlotKind::kNidp:
      return "nidp";
  }
  return "?";
}

PlotKind PlotKindFromName(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (PlotKind k : {PlotKind::kIce, PlotKind::kTdp, PlotKind::kPcdp,
                     PlotKind::kNddp, PlotKind::kNidp}) {
    if (PlotKindName(k) == lower) return k;
  }
  throw ValidationError("unknown plot kind '" + std::string(name) +
                        "' (expected ice, tdp, pcdp, nddp or nidp)");
}

std::vector<double> ColumnMeans(const Matrix& values) {
  std::vector<double> mean(values.cols(), 0.0);
  if (values.rows() == 0) return mean;
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t g = 0; g < values.cols(); ++g) mean[g] += values(i, g);
  }
  for (double& v : mean) v /= static_cast<double>(values.rows());
  return mean;
}

std::vector<double> CurveSet::Curve(std::size_t unit) const {
  const auto row = values.row(unit);
  return {row.begin(), row.end()};
}

void CurveSet::Validate() const {
  grid.Validate();
  if (values.cols() != grid.size() || mean.size() != grid.size()) {
    throw ValidationError("curve set shape does not match its grid");
  }
  for (double v : values.data()) {
    if (!std::isfinite(v)) throw ValidationError("curve value is not finite");
  }
  const std::vector<double> expected = ColumnMeans(values);
  for (std::size_t g = 0; g < mean.size(); ++g) {
    if (!(std::abs(mean[g] - expected[g]) <=
          1e-12 * std::max(1.0, std::abs(expected[g])))) {
      throw ValidationError("mean curve differs from the mean of the unit "
                            "curves at grid point " +
                            std::to_string(g));
    }
  }
}

double BandSet::MaxWidth() const {
  double width = 0.0;
  for (std::size_t g = 0; g < lower.size(); ++g) {
    width = std::max(width, upper[g] - lower[g]);
  }
  return width;
}

void BandSet::Validate() const {
  grid.Validate();
  if (curves.cols() != grid.size() || lower.size() != grid.size() ||
      upper.size() != grid.size() || labels.size() != curves.rows()) {
    throw ValidationError("band shape does not match its grid");
  }
  for (std::size_t k = 0; k < curves.rows(); ++k) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!(lower[g] <= curves(k, g) && curves(k, g) <= upper[g])) {
        throw ValidationError("band envelope does not contain model '" +
                              labels[k] + "'");
      }
    }
  }
}

CurveSet Ice(const Predictor& predictor, const Dataset& data,
             std::string_view variable, const Grid& grid,
             const ComputeOptions& options) {
  CheckVariable(grid, variable);
  const auto& features = predictor.features();
  const auto it = std::find(features.begin(), features.end(), variable);
  if (it == features.end()) {
    throw ValidationError("'" + std::string(variable) +
                          "' is not a feature of " + predictor.Describe());
  }
  if (data.rows() == 0) throw DataError("explanatory data has no rows");
  const std::size_t column = static_cast<std::size_t>(it - features.begin());
  const Matrix base = data.Select(features).values();
  const std::size_t m = base.rows();
  Matrix rows(m * grid.size(), features.size());
  ParallelFor(grid.size(), options.threads, [&](std::size_t g) {
    for (std::size_t i = 0; i < m; ++i) {
      std::span<double> row = rows.row(g * m + i);
      std::copy(base.row(i).begin(), base.row(i).end(), row.begin());
      row[column] = grid.values[g];
    }
  });
  return Assemble(PlotKind::kIce, predictor, grid, m, rows,
                  {"", predictor.Describe(),
                   "set " + std::string(variable) + "=x in the model input",
                   {}});
}

namespace {

CurveSet DoPlot(PlotKind kind, const Ecm& ecm, const Dataset& data,
                std::string_view variable, const Grid& grid,
                const Intervention& extra, std::string description,
                const ComputeOptions& options) {
  CheckVariable(grid, variable);
  ecm.scm().IndexOf(variable);
  const Units units = PrepareUnits(ecm.scm(), data);
  return RunCounterfactual(
      kind, ecm, units, grid, options, std::move(description), {},
      [&](std::size_t g, Matrix& rows) {
        const Intervention action =
            Intervention::Do(std::string(variable), grid.values[g])
                .Union(extra);
        const CounterfactualModel model(ecm.scm(), action);
        WriteFeatureRows(ecm, PropagateAll(model, units), g, rows);
      });
}

}  // namespace

CurveSet Tdp(const Ecm& ecm, const Dataset& data, std::string_view variable,
             const Grid& grid, const ComputeOptions& options) {
  return DoPlot(PlotKind::kTdp, ecm, data, variable, grid, {},
                "do(" + std::string(variable) + "=x)", options);
}

CurveSet Pcdp(const Ecm& ecm, const Dataset& data, std::string_view variable,
              const Grid& grid, const Intervention& control,
              const ComputeOptions& options) {
  for (const Action& action : control.actions()) {
    const auto* set = std::get_if<SetConstant>(&action);
    if (set == nullptr) {
      throw ValidationError(
          "PCDP control may only assign constants to variables");
    }
    if (set->variable == variable) {
      throw ValidationError("PCDP control assigns the plotted variable '" +
                            std::string(variable) + "'");
    }
    ecm.scm().IndexOf(set->variable);
  }
  std::string description = "do(" + std::string(variable) + "=x)";
  if (!control.empty()) description += " + " + control.Describe();
  return DoPlot(PlotKind::kPcdp, ecm, data, variable, grid, control,
                std::move(description), options);
}

CurveSet Nddp(const Ecm& ecm, const Dataset& data, std::string_view variable,
              const Grid& grid, const ComputeOptions& options) {
  CheckVariable(grid, variable);
  ecm.scm().IndexOf(variable);
  const std::vector<std::string> children = ChildrenOf(ecm, variable);
  const Units units = PrepareUnits(ecm.scm(), data);

  Intervention pin;
  for (const std::string& c : children) {
    const std::size_t j = ecm.scm().IndexOf(c);
    std::vector<double> observed(units.count());
    for (std::size_t i = 0; i < units.count(); ++i) {
      observed[i] = units.observed(i, j);
    }
    pin.Add(SeverIncoming{c});
    pin.Add(SetPerUnit{c, std::move(observed)});
  }
  std::string description = "do(" + std::string(variable) + "=x)";
  if (!children.empty()) {
    description += " sever-in(" + JoinNames(children) + ") pin(" +
                   JoinNames(children) + "=observed)";
  }
  return RunCounterfactual(
      PlotKind::kNddp, ecm, units, grid, options, std::move(description), {},
      [&](std::size_t g, Matrix& rows) {
        const Intervention action =
            Intervention::Do(std::string(variable), grid.values[g]).Union(pin);
        const CounterfactualModel model(ecm.scm(), action);
        WriteFeatureRows(ecm, PropagateAll(model, units), g, rows);
      });
}

CurveSet Nidp(const Ecm& ecm, const Dataset& data, std::string_view variable,
              const Grid& grid, const ComputeOptions& options) {
  CheckVariable(grid, variable);
  const std::size_t target = ecm.scm().IndexOf(variable);
  const std::vector<std::string> children = ChildrenOf(ecm, variable);
  const Units units = PrepareUnits(ecm.scm(), data);
  const std::size_t m = units.count();

  std::vector<double> observed_target(m);
  for (std::size_t i = 0; i < m; ++i) {
    observed_target[i] = units.observed(i, target);
  }
  std::vector<std::size_t> child_index;
  for (const std::string& c : children) {
    child_index.push_back(ecm.scm().IndexOf(c));
  }
  std::string description =
      "stage 1: do(" + std::string(variable) + "=x)";
  if (!children.empty()) {
    description += " -> c(x); stage 2: sever-in(" + JoinNames(children) +
                   ") pin(" + JoinNames(children) + "=c(x), " +
                   std::string(variable) + "=observed)";
  } else {
    description += "; stage 2: pin(" + std::string(variable) + "=observed)";
  }
  std::vector<std::string> notes = {
      "stage 2 pins " + std::string(variable) +
      " to its observed value, not to the grid value"};

  return RunCounterfactual(
      PlotKind::kNidp, ecm, units, grid, options, std::move(description),
      std::move(notes), [&](std::size_t g, Matrix& rows) {
        const CounterfactualModel stage1(
            ecm.scm(), Intervention::Do(std::string(variable), grid.values[g]));
        const Matrix counterfactual = PropagateAll(stage1, units);
        Intervention stage2;
        for (std::size_t k = 0; k < children.size(); ++k) {
          std::vector<double> values(m);
          for (std::size_t i = 0; i < m; ++i) {
            values[i] = counterfactual(i, child_index[k]);
          }
          stage2.Add(SeverIncoming{children[k]});
          stage2.Add(SetPerUnit{children[k], std::move(values)});
        }
        stage2.Add(SetPerUnit{std::string(variable), observed_target});
        const CounterfactualModel model(ecm.scm(), stage2);
        WriteFeatureRows(ecm, PropagateAll(model, units), g, rows);
      });
}

CurveSet ComputeCurves(PlotKind kind, const Ecm& ecm, const Dataset& data,
                       std::string_view variable, const Grid& grid,
                       const Intervention& control,
                       const ComputeOptions& options) {
  switch (kind) {
    case PlotKind::kIce: {
      CurveSet out = Ice(ecm.predictor(), data, variable, grid, options);
      out.metadata.scm = ecm.scm().name();
      return out;
    }
    case PlotKind::kTdp:
      return Tdp(ecm, data, variable, grid, options);
    case PlotKind::kPcdp:
      return Pcdp(ecm, data, variable, grid, control, options);
    case PlotKind::kNddp:
      return Nddp(ecm, data, variable, grid, options);
    case PlotKind::kNidp:
      return Nidp(ecm, data, variable, grid, options);
  }
  throw ValidationError("unknown plot kind");
}

EffectDifference ComputeEffectDifference(const CurveSet& curves, double x0,
                                         double x1) {
  const std::size_t g0 = curves.grid.Find(x0);
  const std::size_t g1 = curves.grid.Find(x1);
  for (auto [g, x] : {std::pair{g0, x0}, std::pair{g1, x1}}) {
    if (g == static_cast<std::size_t>(-1)) {
      throw ValidationError(FormatDouble(x) + " is not a grid value of '" +
                            curves.grid.variable + "'");
    }
  }
  EffectDifference out;
  out.x0 = x0;
  out.x1 = x1;
  out.units.resize(curves.units());
  for (std::size_t i = 0; i < curves.units(); ++i) {
    out.units[i] = curves.at(i, g1) - curves.at(i, g0);
  }
  out.mean = curves.mean[g1] - curves.mean[g0];
  return out;
}

BandSet UncertaintyBand(std::span<const Ecm> ecms, const Dataset& data,
                        std::string_view variable, const Grid& grid,
                        PlotKind kind, const ComputeOptions& options) {
  if (ecms.size() < 2) {
    throw ValidationError("an uncertainty band needs at least two ECMs");
  }
  if (kind != PlotKind::kTdp && kind != PlotKind::kNddp &&
      kind != PlotKind::kNidp) {
    throw ValidationError("uncertainty bands support tdp, nddp and nidp, not " +
                          std::string(PlotKindName(kind)));
  }
  auto variable_set = [](const Ecm& e) {
    return std::set<std::string>(e.scm().variables().begin(),
                                 e.scm().variables().end());
  };
  const std::set<std::string> reference = variable_set(ecms[0]);
  for (const Ecm& e : ecms) {
    if (variable_set(e) != reference) {
      throw ValidationError("ECM '" + e.label() + "' has a different variable "
                            "set than '" + ecms[0].label() + "'");
    }
  }
  BandSet band;
  band.kind = kind;
  band.grid = grid;
  band.curves = Matrix(ecms.size(), grid.size());
  for (std::size_t k = 0; k < ecms.size(); ++k) {
    const CurveSet curves =
        ComputeCurves(kind, ecms[k], data, variable, grid, {}, options);
    std::copy(curves.mean.begin(), curves.mean.end(), band.curves.row(k).begin());
    band.labels.push_back(ecms[k].label());
  }
  band.lower.assign(grid.size(), std::numeric_limits<double>::infinity());
  band.upper.assign(grid.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < ecms.size(); ++k) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      band.lower[g] = std::min(band.lower[g], band.curves(k, g));
      band.upper[g] = std::max(band.upper[g], band.curves(k, g));
    }
  }
  return band;
}

}  // namespace cdp
