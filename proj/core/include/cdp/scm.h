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

// Structural causal models with additive noise: V_j = g_j(PA_j) + U_j.
//
// Additivity makes abduction exact, u_j = v_j - g_j(pa_j), so a counterfactual
// is fully determined by one observed row: abduct the noise, modify the
// mechanisms (the intervention), then re-propagate in topological order.

#ifndef CDP_SCM_H_
#define CDP_SCM_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cdp/dataset.h"
#include "cdp/expr.h"

namespace cdp {

struct NoiseSpec {
  enum class Kind { kNormal, kUniform, kPointMass };

  Kind kind = Kind::kPointMass;
  // Normal: (mean, stddev). Uniform: (low, high). PointMass: (value, unused).
  double a = 0.0;
  double b = 0.0;

  static NoiseSpec Normal(double mean, double stddev) {
    return {Kind::kNormal, mean, stddev};
  }
  static NoiseSpec Uniform(double low, double high) {
    return {Kind::kUniform, low, high};
  }
  static NoiseSpec PointMass(double value) {
    return {Kind::kPointMass, value, 0.0};
  }

  // Zero-width Normal/Uniform behave exactly like a point mass.
  bool IsDegenerate() const;
  // Throws ValidationError on stddev < 0, low > high or non-finite params.
  void Validate(std::string_view variable) const;
  double Cdf(double x) const;
  // e.g. "normal(0, 0.2)"; the format used by SCM spec files.
  std::string ToString() const;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct Mechanism {
  std::vector<std::string> parents;
  // Deterministic part over `parents` (and `frozen`); nullopt means 0.
  std::optional<expr::Expression> equation;
  NoiseSpec noise = NoiseSpec::PointMass(0.0);

  // Variables read from per-unit frozen values instead of the graph. Filled in
  // for the children of a SeverOutgoing target.
  std::vector<std::string> frozen;

  // Assigned by an intervention. When set the variable takes this value
  // exactly; equation and noise are ignored.
  std::optional<double> assigned;
  // Per-unit assignment, indexed by unit. Non-empty takes precedence.
  std::vector<double> assigned_per_unit;

  bool IsAssigned() const {
    return assigned.has_value() || !assigned_per_unit.empty();
  }

  friend bool operator==(const Mechanism&, const Mechanism&) = default;
};

struct VariableSpec {
  std::string name;
  Mechanism mechanism;
};

// Unvalidated model description, e.g. as read from a spec file.
struct ScmSpec {
  std::string name;
  std::vector<VariableSpec> variables;
};

class Scm {
 public:
  // Validates `spec`: unique names, declared and non-duplicated parents,
  // equation variables within parents (plus frozen inputs), valid noise and
  // acyclicity. Throws ValidationError naming the problem (one cycle is
  // reported when the graph is cyclic).
  static Scm Validate(ScmSpec spec);

  const std::string& name() const { return name_; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& variables() const { return names_; }
  const std::vector<std::size_t>& topological_order() const { return topo_; }

  std::optional<std::size_t> Find(std::string_view variable) const;
  // Throws ValidationError for unknown names.
  std::size_t IndexOf(std::string_view variable) const;
  bool Contains(std::string_view variable) const {
    return Find(variable).has_value();
  }

  const Mechanism& mechanism(std::size_t index) const {
    return nodes_[index].mechanism;
  }
  const Mechanism& mechanism(std::string_view variable) const {
    return mechanism(IndexOf(variable));
  }
  const std::vector<std::size_t>& parent_indices(std::size_t index) const {
    return nodes_[index].parents;
  }
  std::vector<std::string> Children(std::string_view variable) const;
  bool HasEdge(std::string_view from, std::string_view to) const;
  std::size_t EdgeCount() const;

  // Deterministic part g_j evaluated at `values` (indexed like variables());
  // frozen inputs read from `frozen` (same indexing). 0 when there is no
  // equation.
  double EvaluateEquation(std::size_t index, std::span<const double> values,
                          std::span<const double> frozen = {}) const;

  ScmSpec ToSpec() const;

  friend bool operator==(const Scm& a, const Scm& b);

 private:
  struct NodeData {
    Mechanism mechanism;
    std::vector<std::size_t> parents;
    std::shared_ptr<const expr::Program> program;
  };

  std::string name_;
  std::vector<std::string> names_;
  std::vector<NodeData> nodes_;
  std::vector<std::size_t> topo_;
};

// Graph surgery actions.
struct SetConstant {
  std::string variable;
  double value = 0.0;
};
struct SetPerUnit {
  std::string variable;
  std::vector<double> values;
};
struct SeverIncoming {
  std::string variable;
};
struct SeverOutgoing {
  std::string variable;
};
struct ReplaceMechanism {
  std::string variable;
  Mechanism mechanism;
};

using Action = std::variant<SetConstant, SetPerUnit, SeverIncoming,
                            SeverOutgoing, ReplaceMechanism>;

class Intervention {
 public:
  Intervention() = default;
  explicit Intervention(std::vector<Action> actions)
      : actions_(std::move(actions)) {}

  // do(variable = value)
  static Intervention Do(std::string variable, double value);

  Intervention& Add(Action action) {
    actions_.push_back(std::move(action));
    return *this;
  }
  Intervention Union(const Intervention& other) const;

  const std::vector<Action>& actions() const { return actions_; }
  bool empty() const { return actions_.empty(); }

  // e.g. "do(X=2, M=0)"; per-unit values are abbreviated.
  std::string Describe() const;

 private:
  std::vector<Action> actions_;
};

// Returns the modified model M^{do(I)}. Set actions leave the target with no
// parents and an assigned value; SeverIncoming drops the target's parents and
// zeroes its deterministic part; SeverOutgoing turns the target into a frozen
// input of each child; ReplaceMechanism swaps the mechanism. Throws
// ValidationError on conflicting actions, unknown variables or an invalid
// result (e.g. a cycle introduced by a replacement).
Scm ApplyIntervention(const Scm& scm, const Intervention& intervention);

struct SampleResult {
  Dataset data;
  NoiseDataset noise;
};

// Draws n units in topological order. The noise of (variable j, unit i) comes
// from an independent substream keyed by (seed, j, i), so results do not
// depend on evaluation order. The recorded noise is v - g(pa) computed on the
// same arithmetic path as Abduct, so Abduct(scm, data) reproduces it bitwise.
SampleResult Sample(const Scm& scm, std::size_t n, std::uint64_t seed);

// Exact point abduction: u_j = v_j - g_j(observed parents), per unit. `data`
// may hold extra columns; result columns follow scm.variables().
NoiseDataset Abduct(const Scm& scm, const Dataset& data);

// M^{do(I)} prepared for repeated per-unit propagation.
class CounterfactualModel {
 public:
  CounterfactualModel(const Scm& scm, const Intervention& intervention);

  const Scm& modified() const { return modified_; }

  // Action + prediction for one unit. `observed` and `noise` are indexed like
  // scm.variables(); `frozen` supplies per-unit values for frozen inputs
  // (same indexing, may be empty when there are none). Writes every variable
  // into `out`.
  void Propagate(std::span<const double> observed,
                 std::span<const double> noise, std::size_t unit,
                 std::span<const double> frozen, std::span<double> out) const;

 private:
  Scm modified_;
  // Variables whose mechanism the intervention left untouched.
  std::vector<bool> pristine_;
};

// Single-unit convenience wrapper around CounterfactualModel.
std::vector<double> Counterfactual(const Scm& scm,
                                   std::span<const double> observed,
                                   std::span<const double> noise,
                                   const Intervention& intervention,
                                   std::size_t unit = 0,
                                   std::span<const double> frozen = {});

// Rows of `data` restricted to scm.variables(), in that order.
Matrix ObservedMatrix(const Scm& scm, const Dataset& data);

}  // namespace cdp

#endif  // CDP_SCM_H_
