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


// Explanatory causal models and the dependence plots computed from them.
//
// Every plot follows the same recipe: abduct each unit's noise from the
// explanatory data, modify the model per grid value, propagate, and read the
// black-box prediction on the counterfactual features. All m x |grid|
// counterfactual rows of one plot go to the predictor in a single batch.

#ifndef CDP_ENGINE_H_
#define CDP_ENGINE_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdp/dataset.h"
#include "cdp/predictor.h"
#include "cdp/scm.h"

namespace cdp {

// Reserved name of the prediction node.
inline constexpr std::string_view kPredictionNode = "__yhat";

// An SCM over the predictors plus the prediction node, whose parents are the
// predictor's features and whose mechanism is the predictor with zero noise.
class Ecm {
 public:
  const Scm& scm() const { return scm_; }
  const Predictor& predictor() const { return *predictor_; }
  const PredictorPtr& predictor_ptr() const { return predictor_; }
  const std::string& label() const { return label_; }

  // SCM index of each predictor feature, in predictor feature order.
  const std::vector<std::size_t>& feature_indices() const {
    return feature_indices_;
  }

  // SCM variables followed by kPredictionNode.
  std::vector<std::string> Nodes() const;
  std::vector<std::string> Parents(std::string_view node) const;
  // Every (from, to) edge, SCM edges first.
  std::vector<std::pair<std::string, std::string>> Edges() const;
  NoiseSpec prediction_noise() const { return NoiseSpec::PointMass(0.0); }

 private:
  friend Ecm BuildEcm(Scm scm, PredictorPtr predictor, std::string label);

  Scm scm_;
  PredictorPtr predictor_;
  std::string label_;
  std::vector<std::size_t> feature_indices_;
};

// Throws ValidationError if a feature is not an SCM variable or the SCM
// already uses kPredictionNode. An empty label becomes "<scm>/<predictor>".
Ecm BuildEcm(Scm scm, PredictorPtr predictor, std::string label = "");

struct Grid {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::string variable;
  std::vector<double> values;

  // Nonempty, finite, strictly increasing; ValidationError otherwise.
  void Validate() const;
  std::size_t size() const { return values.size(); }
  // Index of the value equal to x, or npos.
  std::size_t Find(double x) const;
  // This grid with `extra` merged in (sorted, duplicates dropped).
  Grid With(std::span<const double> extra) const;
};

inline constexpr int kDefaultGridResolution = 40;
inline constexpr std::size_t kOrdinalCutoff = 15;

// Sorted distinct values when the column has at most kOrdinalCutoff of them,
// otherwise `resolution` equally spaced points over [min, max]. Throws
// ValidationError for resolution < 2 and DataError for a missing or constant
// column.
Grid MakeGrid(const Dataset& data, std::string_view variable,
              int resolution = kDefaultGridResolution);

enum class PlotKind { kIce, kTdp, kPcdp, kNddp, kNidp };

// "ice", "tdp", "pcdp", "nddp", "nidp".
std::string_view PlotKindName(PlotKind kind);
// Case-insensitive; ValidationError for unknown names.
PlotKind PlotKindFromName(std::string_view name);

struct CurveMetadata {
  std::string scm;
  std::string predictor;
  std::string intervention;
  std::vector<std::string> notes;
};

struct CurveSet {
  PlotKind kind = PlotKind::kIce;
  Grid grid;
  // units x grid values.
  Matrix values;
  std::vector<double> mean;
  CurveMetadata metadata;

  std::size_t units() const { return values.rows(); }
  double at(std::size_t unit, std::size_t g) const { return values(unit, g); }
  std::vector<double> Curve(std::size_t unit) const;

  // Finite values, consistent shapes, mean within 1e-12 of the column mean.
  void Validate() const;
};

// Column means of `values` in unit order.
std::vector<double> ColumnMeans(const Matrix& values);

struct BandSet {
  PlotKind kind = PlotKind::kTdp;
  Grid grid;
  std::vector<std::string> labels;
  // models x grid values: each model's mean curve.
  Matrix curves;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t models() const { return curves.rows(); }
  // Largest upper - lower over the grid.
  double MaxWidth() const;
  void Validate() const;
};

struct ComputeOptions {
  // Worker threads over grid points; results do not depend on it.
  int threads = 1;
};

CurveSet Ice(const Predictor& predictor, const Dataset& data,
             std::string_view variable, const Grid& grid,
             const ComputeOptions& options = {});

CurveSet Tdp(const Ecm& ecm, const Dataset& data, std::string_view variable,
             const Grid& grid, const ComputeOptions& options = {});

// `control` may only hold SetConstant actions on variables other than
// `variable`.
CurveSet Pcdp(const Ecm& ecm, const Dataset& data, std::string_view variable,
              const Grid& grid, const Intervention& control,
              const ComputeOptions& options = {});

// Children of `variable` are cut from their parents and pinned to their
// observed values.
CurveSet Nddp(const Ecm& ecm, const Dataset& data, std::string_view variable,
              const Grid& grid, const ComputeOptions& options = {});

// Children take their counterfactual values under do(variable = x) while
// `variable` itself is pinned to its observed value.
CurveSet Nidp(const Ecm& ecm, const Dataset& data, std::string_view variable,
              const Grid& grid, const ComputeOptions& options = {});

// Dispatches on `kind`; ICE uses the ECM's predictor and `control` is only
// read for PCDP.
CurveSet ComputeCurves(PlotKind kind, const Ecm& ecm, const Dataset& data,
                       std::string_view variable, const Grid& grid,
                       const Intervention& control = {},
                       const ComputeOptions& options = {});

struct EffectDifference {
  double x0 = 0.0;
  double x1 = 0.0;
  std::vector<double> units;
  double mean = 0.0;
};

// curve(x1) - curve(x0). Both values must be grid points (ValidationError).
EffectDifference ComputeEffectDifference(const CurveSet& curves, double x0,
                                         double x1);

// Mean curve of `kind` (TDP, NDDP or NIDP) under each ECM plus the pointwise
// envelope. Needs at least two ECMs over the same variable set.
BandSet UncertaintyBand(std::span<const Ecm> ecms, const Dataset& data,
                        std::string_view variable, const Grid& grid,
                        PlotKind kind, const ComputeOptions& options = {});

}  // namespace cdp

#endif  // CDP_ENGINE_H_
