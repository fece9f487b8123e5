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

#include "cdp/scm.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "cdp/rng.h"

namespace cdp {
namespace {

bool IsIdentifier(std::string_view name) {
  if (name.empty()) return false;
  const auto start = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  };
  if (!start(name.front())) return false;
  return std::all_of(name.begin(), name.end(), [&](char c) {
    return start(c) || (c >= '0' && c <= '9');
  });
}

bool SameBits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

double Draw(const NoiseSpec& noise, SplitMix64& engine) {
  if (noise.IsDegenerate()) {
    return noise.a;
  }
  switch (noise.kind) {
    case NoiseSpec::Kind::kNormal:
      return std::normal_distribution<double>(noise.a, noise.b)(engine);
    case NoiseSpec::Kind::kUniform:
      return std::uniform_real_distribution<double>(noise.a, noise.b)(engine);
    case NoiseSpec::Kind::kPointMass:
      break;
  }
  return noise.a;
}

const std::string& ActionTarget(const Action& action) {
  return std::visit([](const auto& a) -> const std::string& { return a.variable; },
                    action);
}

// Depth-first search for one cycle among `remaining` nodes; returns it as a
// closed path of names.
std::string DescribeCycle(const std::vector<std::string>& names,
                          const std::vector<std::vector<std::size_t>>& parents,
                          const std::vector<bool>& remaining) {
  const std::size_t n = names.size();
  // Walk parent links: every remaining node has a remaining parent, so the walk
  // must revisit a node.
  std::size_t start = 0;
  while (start < n && !remaining[start]) ++start;
  std::vector<int> seen_at(n, -1);
  std::vector<std::size_t> path;
  std::size_t current = start;
  while (seen_at[current] < 0) {
    seen_at[current] = static_cast<int>(path.size());
    path.push_back(current);
    for (std::size_t p : parents[current]) {
      if (remaining[p]) {
        current = p;
        break;
      }
    }
  }
  std::vector<std::size_t> cycle(path.begin() + seen_at[current], path.end());
  std::reverse(cycle.begin(), cycle.end());
  std::string out;
  for (std::size_t v : cycle) out += names[v] + " -> ";
  out += names[cycle.front()];
  return out;
}

}  // namespace

bool NoiseSpec::IsDegenerate() const {
  switch (kind) {
    case Kind::kNormal:
      return b == 0.0;
    case Kind::kUniform:
      return a == b;
    case Kind::kPointMass:
      return true;
  }
  return true;
}

void NoiseSpec::Validate(std::string_view variable) const {
  const std::string where = "noise of '" + std::string(variable) + "'";
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw ValidationError(where + ": non-finite parameter");
  }
  if (kind == Kind::kNormal && b < 0.0) {
    throw ValidationError(where + ": stddev must be >= 0");
  }
  if (kind == Kind::kUniform && a > b) {
    throw ValidationError(where + ": uniform low must be <= high");
  }
}

double NoiseSpec::Cdf(double x) const {
  if (IsDegenerate()) return x >= a ? 1.0 : 0.0;
  switch (kind) {
    case Kind::kNormal:
      return 0.5 * std::erfc(-(x - a) / (b * std::sqrt(2.0)));
    case Kind::kUniform:
      return std::clamp((x - a) / (b - a), 0.0, 1.0);
    case Kind::kPointMass:
      break;
  }
  return x >= a ? 1.0 : 0.0;
}

std::string NoiseSpec::ToString() const {
  switch (kind) {
    case Kind::kNormal:
      return "normal(" + FormatDouble(a) + ", " + FormatDouble(b) + ")";
    case Kind::kUniform:
      return "uniform(" + FormatDouble(a) + ", " + FormatDouble(b) + ")";
    case Kind::kPointMass:
      break;
  }
  return "point(" + FormatDouble(a) + ")";
}

Scm Scm::Validate(ScmSpec spec) {
  Scm scm;
  scm.name_ = std::move(spec.name);
  const std::size_t n = spec.variables.size();
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& name = spec.variables[i].name;
    if (!IsIdentifier(name)) {
      throw ValidationError("invalid variable name '" + name + "'");
    }
    if (!index.emplace(name, i).second) {
      throw ValidationError("duplicate variable '" + name + "'");
    }
    scm.names_.push_back(name);
  }

  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& name = scm.names_[i];
    const Mechanism& m = spec.variables[i].mechanism;
    std::set<std::string_view> allowed;
    for (const std::string& p : m.parents) {
      const auto it = index.find(p);
      if (it == index.end()) {
        throw ValidationError("variable '" + name +
                              "' has undeclared parent '" + p + "'");
      }
      if (it->second == i) {
        throw ValidationError("variable '" + name + "' is its own parent");
      }
      if (!allowed.insert(p).second) {
        throw ValidationError("variable '" + name + "' lists parent '" + p +
                              "' twice");
      }
      parents[i].push_back(it->second);
    }
    for (const std::string& f : m.frozen) {
      if (!index.contains(f)) {
        throw ValidationError("variable '" + name +
                              "' has undeclared frozen input '" + f + "'");
      }
      if (!allowed.insert(f).second) {
        throw ValidationError("variable '" + name + "' lists '" + f +
                              "' as both parent and frozen input");
      }
    }
    if (m.equation) {
      for (const std::string& v : expr::FreeVariables(*m.equation)) {
        if (!allowed.contains(v)) {
          throw ValidationError("equation of '" + name + "' references '" +
                                v + "', which is not a parent");
        }
      }
    }
    m.noise.Validate(name);
    if (m.assigned && !std::isfinite(*m.assigned)) {
      throw ValidationError("non-finite assigned value for '" + name + "'");
    }
    for (double v : m.assigned_per_unit) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite per-unit value for '" + name + "'");
      }
    }
  }

  // Kahn's algorithm, ties broken by declaration order.
  std::vector<std::size_t> pending(n);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = parents[i].size();
    for (std::size_t p : parents[i]) children[p].push_back(i);
  }
  std::vector<bool> done(n, false);
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.insert(i);
  }
  while (!ready.empty()) {
    const std::size_t v = *ready.begin();
    ready.erase(ready.begin());
    done[v] = true;
    scm.topo_.push_back(v);
    for (std::size_t c : children[v]) {
      if (--pending[c] == 0) ready.insert(c);
    }
  }
  if (scm.topo_.size() != n) {
    std::vector<bool> remaining(n);
    for (std::size_t i = 0; i < n; ++i) remaining[i] = !done[i];
    throw ValidationError("cycle detected: " +
                          DescribeCycle(scm.names_, parents, remaining));
  }

  scm.nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    NodeData& node = scm.nodes_[i];
    node.mechanism = std::move(spec.variables[i].mechanism);
    node.parents = std::move(parents[i]);
    if (node.mechanism.equation) {
      const std::set<std::string> frozen(node.mechanism.frozen.begin(),
                                         node.mechanism.frozen.end());
      node.program = std::make_shared<const expr::Program>(
          expr::Program::Compile(
              *node.mechanism.equation,
              [&](std::string_view v) -> std::optional<expr::Slot> {
                const auto it = index.find(v);
                if (it == index.end()) return std::nullopt;
                const std::uint32_t bank =
                    frozen.contains(std::string(v)) ? 1 : 0;
                return expr::Slot{bank,
                                  static_cast<std::uint32_t>(it->second)};
              }));
    }
  }
  return scm;
}

std::optional<std::size_t> Scm::Find(std::string_view variable) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == variable) return i;
  }
  return std::nullopt;
}

std::size_t Scm::IndexOf(std::string_view variable) const {
  const auto i = Find(variable);
  if (!i) {
    throw ValidationError("unknown variable '" + std::string(variable) +
                          "' in model '" + name_ + "'");
  }
  return *i;
}

std::vector<std::string> Scm::Children(std::string_view variable) const {
  const std::size_t v = IndexOf(variable);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& p = nodes_[i].parents;
    if (std::find(p.begin(), p.end(), v) != p.end()) out.push_back(names_[i]);
  }
  return out;
}

bool Scm::HasEdge(std::string_view from, std::string_view to) const {
  const std::size_t f = IndexOf(from);
  const auto& p = nodes_[IndexOf(to)].parents;
  return std::find(p.begin(), p.end(), f) != p.end();
}

std::size_t Scm::EdgeCount() const {
  std::size_t count = 0;
  for (const NodeData& node : nodes_) count += node.parents.size();
  return count;
}

double Scm::EvaluateEquation(std::size_t index, std::span<const double> values,
                             std::span<const double> frozen) const {
  const NodeData& node = nodes_[index];
  if (!node.program) return 0.0;
  if (!node.mechanism.frozen.empty() && frozen.size() < names_.size()) {
    throw ComputeError("variable '" + names_[index] +
                       "' needs frozen input values");
  }
  return node.program->Run(values, frozen);
}

ScmSpec Scm::ToSpec() const {
  ScmSpec spec;
  spec.name = name_;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    spec.variables.push_back({names_[i], nodes_[i].mechanism});
  }
  return spec;
}

bool operator==(const Scm& a, const Scm& b) {
  if (a.name_ != b.name_ || a.names_ != b.names_) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    if (!(a.nodes_[i].mechanism == b.nodes_[i].mechanism)) return false;
  }
  return true;
}

Intervention Intervention::Do(std::string variable, double value) {
  return Intervention({SetConstant{std::move(variable), value}});
}

Intervention Intervention::Union(const Intervention& other) const {
  Intervention out = *this;
  for (const Action& a : other.actions_) out.actions_.push_back(a);
  return out;
}

std::string Intervention::Describe() const {
  if (actions_.empty()) return "none";
  std::string sets;
  std::string surgery;
  const auto append = [](std::string& s, const std::string& item) {
    if (!s.empty()) s += ", ";
    s += item;
  };
  for (const Action& action : actions_) {
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, SetConstant>) {
            append(sets, a.variable + "=" + FormatDouble(a.value));
          } else if constexpr (std::is_same_v<T, SetPerUnit>) {
            append(sets, a.variable + "=<per-unit>");
          } else if constexpr (std::is_same_v<T, SeverIncoming>) {
            append(surgery, "sever-in(" + a.variable + ")");
          } else if constexpr (std::is_same_v<T, SeverOutgoing>) {
            append(surgery, "sever-out(" + a.variable + ")");
          } else {
            append(surgery, "replace(" + a.variable + ")");
          }
        },
        action);
  }
  std::string out;
  if (!sets.empty()) out = "do(" + sets + ")";
  if (!surgery.empty()) {
    if (!out.empty()) out += " ";
    out += surgery;
  }
  return out;
}

Scm ApplyIntervention(const Scm& scm, const Intervention& intervention) {
  std::map<std::string, int, std::less<>> defining;
  std::set<std::string, std::less<>> sever_in;
  std::set<std::string, std::less<>> sever_out;
  for (const Action& action : intervention.actions()) {
    const std::string& target = ActionTarget(action);
    if (!scm.Contains(target)) {
      throw ValidationError("intervention targets unknown variable '" +
                            target + "'");
    }
    const bool conflict = std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, SeverIncoming>) {
            return !sever_in.insert(a.variable).second;
          } else if constexpr (std::is_same_v<T, SeverOutgoing>) {
            return !sever_out.insert(a.variable).second;
          } else {
            return ++defining[a.variable] > 1;
          }
        },
        action);
    if (conflict) {
      throw ValidationError("conflicting intervention actions on '" + target +
                            "'");
    }
  }
  for (const Action& action : intervention.actions()) {
    if (const auto* r = std::get_if<ReplaceMechanism>(&action)) {
      if (sever_in.contains(r->variable)) {
        throw ValidationError("conflicting intervention actions on '" +
                              r->variable + "'");
      }
    }
  }

  ScmSpec spec = scm.ToSpec();
  auto mech = [&](const std::string& name) -> Mechanism& {
    return spec.variables[scm.IndexOf(name)].mechanism;
  };
  for (const Action& action : intervention.actions()) {
    if (const auto* r = std::get_if<ReplaceMechanism>(&action)) {
      mech(r->variable) = r->mechanism;
    }
  }
  for (const std::string& v : sever_in) {
    Mechanism& m = mech(v);
    m.parents.clear();
    m.frozen.clear();
    m.equation.reset();
  }
  for (const std::string& v : sever_out) {
    for (VariableSpec& child : spec.variables) {
      auto& p = child.mechanism.parents;
      const auto it = std::find(p.begin(), p.end(), v);
      if (it == p.end()) continue;
      p.erase(it);
      child.mechanism.frozen.push_back(v);
    }
  }
  for (const Action& action : intervention.actions()) {
    if (const auto* s = std::get_if<SetConstant>(&action)) {
      Mechanism m;
      m.assigned = s->value;
      mech(s->variable) = std::move(m);
    } else if (const auto* s = std::get_if<SetPerUnit>(&action)) {
      if (s->values.empty()) {
        throw ValidationError("per-unit assignment of '" + s->variable +
                              "' has no values");
      }
      Mechanism m;
      m.assigned_per_unit = s->values;
      mech(s->variable) = std::move(m);
    }
  }
  return Scm::Validate(std::move(spec));
}

SampleResult Sample(const Scm& scm, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("sample size must be at least 1");
  const std::size_t p = scm.size();
  Matrix values(n, p);
  Matrix noise(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> row = values.row(i);
    for (std::size_t j : scm.topological_order()) {
      const Mechanism& m = scm.mechanism(j);
      if (!m.assigned_per_unit.empty()) {
        if (i >= m.assigned_per_unit.size()) {
          throw ComputeError("per-unit assignment of '" +
                             scm.variables()[j] + "' is shorter than n");
        }
        row[j] = m.assigned_per_unit[i];
        noise(i, j) = 0.0;
        continue;
      }
      if (m.assigned) {
        row[j] = *m.assigned;
        noise(i, j) = 0.0;
        continue;
      }
      const double g = scm.EvaluateEquation(j, row);
      SplitMix64 engine(SubstreamSeed(seed, j, i));
      const double v = g + Draw(m.noise, engine);
      if (!std::isfinite(v)) {
        throw ComputeError("non-finite sample for '" + scm.variables()[j] +
                           "'");
      }
      row[j] = v;
      noise(i, j) = v - g;
    }
  }
  return {Dataset(scm.variables(), std::move(values)),
          NoiseDataset(scm.variables(), std::move(noise))};
}

Matrix ObservedMatrix(const Scm& scm, const Dataset& data) {
  std::vector<std::size_t> cols;
  cols.reserve(scm.size());
  for (const std::string& v : scm.variables()) {
    cols.push_back(data.ColumnIndex(v));
  }
  Matrix out(data.rows(), scm.size());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = data(i, cols[j]);
  }
  return out;
}

NoiseDataset Abduct(const Scm& scm, const Dataset& data) {
  const Matrix observed = ObservedMatrix(scm, data);
  Matrix noise(observed.rows(), observed.cols());
  for (std::size_t i = 0; i < observed.rows(); ++i) {
    const std::span<const double> row = observed.row(i);
    for (std::size_t j = 0; j < scm.size(); ++j) {
      if (scm.mechanism(j).IsAssigned()) {
        noise(i, j) = 0.0;
        continue;
      }
      noise(i, j) = row[j] - scm.EvaluateEquation(j, row);
    }
  }
  return NoiseDataset(scm.variables(), std::move(noise));
}

CounterfactualModel::CounterfactualModel(const Scm& scm,
                                         const Intervention& intervention)
    : modified_(ApplyIntervention(scm, intervention)),
      pristine_(scm.size()) {
  for (std::size_t j = 0; j < scm.size(); ++j) {
    const Mechanism& m = modified_.mechanism(j);
    pristine_[j] = m == scm.mechanism(j) && m.frozen.empty() &&
                   !m.IsAssigned();
  }
}

void CounterfactualModel::Propagate(std::span<const double> observed,
                                    std::span<const double> noise,
                                    std::size_t unit,
                                    std::span<const double> frozen,
                                    std::span<double> out) const {
  const std::size_t p = modified_.size();
  if (observed.size() != p || noise.size() != p || out.size() != p) {
    throw ComputeError("counterfactual row has wrong width for model '" +
                       modified_.name() + "'");
  }
  for (std::size_t j : modified_.topological_order()) {
    const Mechanism& m = modified_.mechanism(j);
    if (!m.assigned_per_unit.empty()) {
      if (unit >= m.assigned_per_unit.size()) {
        throw ComputeError("no per-unit value for unit " +
                           std::to_string(unit) + " of '" +
                           modified_.variables()[j] + "'");
      }
      out[j] = m.assigned_per_unit[unit];
      continue;
    }
    if (m.assigned) {
      out[j] = *m.assigned;
      continue;
    }
    if (pristine_[j]) {
      const auto& parents = modified_.parent_indices(j);
      const bool unchanged =
          std::all_of(parents.begin(), parents.end(), [&](std::size_t q) {
            return SameBits(out[q], observed[q]);
          });
      if (unchanged) {
        out[j] = observed[j];
        continue;
      }
    }
    const double v =
        modified_.EvaluateEquation(j, std::span<const double>(out), frozen) +
        noise[j];
    if (!std::isfinite(v)) {
      throw ComputeError("non-finite counterfactual value for '" +
                         modified_.variables()[j] + "'");
    }
    out[j] = v;
  }
}

std::vector<double> Counterfactual(const Scm& scm,
                                   std::span<const double> observed,
                                   std::span<const double> noise,
                                   const Intervention& intervention,
                                   std::size_t unit,
                                   std::span<const double> frozen) {
  std::vector<double> out(scm.size());
  CounterfactualModel(scm, intervention)
      .Propagate(observed, noise, unit, frozen, out);
  return out;
}

}  // namespace cdp
