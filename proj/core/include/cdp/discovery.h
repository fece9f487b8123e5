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


// Constraint-based structure learning (PC-stable with Fisher-z tests) and
// additive-noise model fitting on a chosen DAG.

#ifndef CDP_DISCOVERY_H_
#define CDP_DISCOVERY_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdp/dataset.h"
#include "cdp/scm.h"

namespace cdp {

// Partially directed graph over named variables. Undirected edges are stored
// once; Edges() reports them with the lexicographically smaller name first.
class Cpdag {
 public:
  struct Edge {
    std::string from;
    std::string to;
    bool directed = false;

    friend bool operator==(const Edge&, const Edge&) = default;
  };

  Cpdag() = default;
  // ValidationError on empty or duplicate names.
  explicit Cpdag(std::vector<std::string> variables);

  const std::vector<std::string>& variables() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::optional<std::size_t> Find(std::string_view name) const;
  std::size_t IndexOf(std::string_view name) const;

  // Replace any existing edge between the two variables.
  void SetDirected(std::string_view from, std::string_view to);
  void SetUndirected(std::string_view a, std::string_view b);
  void Remove(std::string_view a, std::string_view b);

  bool Adjacent(std::string_view a, std::string_view b) const;
  bool HasDirected(std::string_view from, std::string_view to) const;
  bool HasUndirected(std::string_view a, std::string_view b) const;

  // Index-based views used by the algorithms.
  bool adjacent(std::size_t a, std::size_t b) const { return adj_[a][b]; }
  bool directed(std::size_t from, std::size_t to) const {
    return adj_[from][to] && head_[from][to] && !head_[to][from];
  }
  bool undirected(std::size_t a, std::size_t b) const {
    return adj_[a][b] && !head_[a][b] && !head_[b][a];
  }
  void SetDirected(std::size_t from, std::size_t to);
  void SetUndirected(std::size_t a, std::size_t b);
  void Remove(std::size_t a, std::size_t b);

  // Sorted by (from, to) of the reported orientation.
  std::vector<Edge> Edges() const;
  std::size_t EdgeCount() const;
  bool IsFullyDirected() const;

  // Orientation conflicts met while building this graph.
  const std::vector<std::string>& conflicts() const { return conflicts_; }
  void AddConflict(std::string message) {
    conflicts_.push_back(std::move(message));
  }

  // ValidationError on a directed cycle.
  void Validate() const;

  // Lines "A -> B" / "A -- B", sorted, each ending in '\n'.
  std::string ToText() const;

  friend bool operator==(const Cpdag& a, const Cpdag& b) {
    return a.names_ == b.names_ && a.adj_ == b.adj_ && a.head_ == b.head_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<bool>> adj_;
  // head_[a][b]: arrowhead at b on the a-b edge.
  std::vector<std::vector<bool>> head_;
  std::vector<std::string> conflicts_;
};

// Parses the ToText format; blank lines and '#' comments are skipped. Variables
// not mentioned in any edge can be supplied in `variables` (their order is
// kept; mentioned extras are appended in order of appearance). ParseError
// with the line number on malformed lines.
Cpdag ParseCpdag(std::string_view text, std::vector<std::string> variables = {});

// Separating sets keyed by unordered variable pair.
class SepsetTable {
 public:
  void Set(std::string_view a, std::string_view b,
           std::vector<std::string> sepset);
  const std::vector<std::string>* Find(std::string_view a,
                                       std::string_view b) const;
  std::size_t size() const { return table_.size(); }
  const std::map<std::pair<std::string, std::string>,
                 std::vector<std::string>>&
  entries() const {
    return table_;
  }

 private:
  std::map<std::pair<std::string, std::string>, std::vector<std::string>>
      table_;
};

struct CiTestResult {
  double statistic = 0.0;
  double partial_correlation = 0.0;
  bool independent = true;
};

// Fisher-z tests against one precomputed correlation matrix.
class FisherZ {
 public:
  // DataError for constant columns or fewer than 4 rows.
  explicit FisherZ(const Dataset& data);

  const std::vector<std::string>& variables() const { return names_; }
  std::size_t rows() const { return n_; }

  // Partial correlation of i and j given s from the inverse of the
  // correlation submatrix. ComputeError if that submatrix is singular,
  // DataError if n <= |s| + 3, ValidationError unless 0 < alpha < 1.
  CiTestResult Test(std::size_t i, std::size_t j,
                    std::span<const std::size_t> s, double alpha) const;

 private:
  std::vector<std::string> names_;
  std::size_t n_ = 0;
  std::vector<double> corr_;  // row-major p x p
};

CiTestResult FisherZTest(const Dataset& data, std::string_view i,
                         std::string_view j, std::span<const std::string> s,
                         double alpha);

inline constexpr double kDefaultAlpha = 0.05;
inline constexpr int kDefaultMaxCond = 3;
inline constexpr int kDefaultAnmDegree = 3;

struct SkeletonResult {
  // Undirected edges only.
  Cpdag skeleton;
  SepsetTable sepsets;
  std::size_t tests = 0;
};

// PC-stable: neighbourhoods are frozen at the start of each conditioning
// level and candidate sets are tried in name order, so the result does not
// depend on column order.
SkeletonResult PcSkeleton(const Dataset& data, double alpha = kDefaultAlpha,
                          int max_cond = kDefaultMaxCond);

// V-structures from the sepsets, then Meek rules 1-4 to closure. Edges with
// contradicting v-structure proposals stay undirected and are listed in
// conflicts().
Cpdag OrientCpdag(const Cpdag& skeleton, const SepsetTable& sepsets);

// Fully directed graph.
struct Dag {
  std::vector<std::string> variables;
  // Sorted (from, to) pairs.
  std::vector<std::pair<std::string, std::string>> edges;

  std::vector<std::string> Parents(std::string_view variable) const;
  bool HasEdge(std::string_view from, std::string_view to) const;
  std::string ToText() const;

  friend bool operator==(const Dag&, const Dag&) = default;
};

// ValidationError if the Cpdag still has undirected edges.
Dag ToDag(const Cpdag& cpdag);
// Drops the edge between a and b (either direction); ValidationError if none.
Dag RemoveEdge(Dag dag, std::string_view a, std::string_view b);
// Drops a variable and every edge touching it.
Dag DropVariable(Dag dag, std::string_view variable);

struct DagEnumeration {
  std::vector<Dag> dags;
  bool truncated = false;
};

// Acyclic orientations of the undirected edges that create no new unshielded
// collider from two formerly undirected edges. Undirected edges are taken in
// name order; bit 0 orients an edge from its smaller to its larger name, and
// results come in lexicographic order of the bit vector. At most `cap` DAGs
// are returned (ValidationError for cap < 1).
DagEnumeration EnumerateDags(const Cpdag& cpdag, std::size_t cap = 64);

// One additive-noise mechanism per variable: an OLS polynomial of total
// degree <= `degree` on its parents with Normal(0, residual sd) noise; roots
// get Normal(mean, sd) and no equation.
Scm FitAnm(const Dag& dag, const Dataset& data, int degree = kDefaultAnmDegree,
           std::string name = "anm");

}  // namespace cdp

#endif  // CDP_DISCOVERY_H_
