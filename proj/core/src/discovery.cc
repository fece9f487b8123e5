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


#include "cdp/discovery.h"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "cdp/error.h"
#include "cdp/predictor.h"

namespace cdp {
namespace {

std::pair<std::string, std::string> Key(std::string_view a,
                                        std::string_view b) {
  return a < b ? std::pair{std::string(a), std::string(b)}
               : std::pair{std::string(b), std::string(a)};
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// Calls fn(subset) for every size-k subset of pool in lexicographic order of
// positions; stops early when fn returns true. Returns whether it stopped.
bool ForEachSubset(const std::vector<std::size_t>& pool, std::size_t k,
                   const std::function<bool(const std::vector<std::size_t>&)>&
                       fn) {
  if (k > pool.size()) return false;
  std::vector<std::size_t> pos(k);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::vector<std::size_t> subset(k);
  while (true) {
    for (std::size_t t = 0; t < k; ++t) subset[t] = pool[pos[t]];
    if (fn(subset)) return true;
    std::size_t t = k;
    while (t > 0 && pos[t - 1] == pool.size() - k + (t - 1)) --t;
    if (t == 0) return false;
    ++pos[t - 1];
    for (std::size_t u = t; u < k; ++u) pos[u] = pos[u - 1] + 1;
  }
}

double SampleSd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

Cpdag::Cpdag(std::vector<std::string> variables) : names_(std::move(variables)) {
  std::set<std::string> seen;
  for (const std::string& n : names_) {
    if (n.empty()) throw ValidationError("empty variable name in graph");
    if (!seen.insert(n).second) {
      throw ValidationError("duplicate variable '" + n + "' in graph");
    }
  }
  adj_.assign(names_.size(), std::vector<bool>(names_.size(), false));
  head_ = adj_;
}

std::optional<std::size_t> Cpdag::Find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Cpdag::IndexOf(std::string_view name) const {
  const auto i = Find(name);
  if (!i) throw ValidationError("unknown graph variable '" + std::string(name) + "'");
  return *i;
}

void Cpdag::SetDirected(std::size_t from, std::size_t to) {
  if (from == to) {
    throw ValidationError("self-loop on '" + names_[from] + "'");
  }
  adj_[from][to] = adj_[to][from] = true;
  head_[from][to] = true;
  head_[to][from] = false;
}

void Cpdag::SetUndirected(std::size_t a, std::size_t b) {
  if (a == b) throw ValidationError("self-loop on '" + names_[a] + "'");
  adj_[a][b] = adj_[b][a] = true;
  head_[a][b] = head_[b][a] = false;
}

void Cpdag::Remove(std::size_t a, std::size_t b) {
  adj_[a][b] = adj_[b][a] = false;
  head_[a][b] = head_[b][a] = false;
}

void Cpdag::SetDirected(std::string_view from, std::string_view to) {
  SetDirected(IndexOf(from), IndexOf(to));
}
void Cpdag::SetUndirected(std::string_view a, std::string_view b) {
  SetUndirected(IndexOf(a), IndexOf(b));
}
void Cpdag::Remove(std::string_view a, std::string_view b) {
  Remove(IndexOf(a), IndexOf(b));
}
bool Cpdag::Adjacent(std::string_view a, std::string_view b) const {
  return adjacent(IndexOf(a), IndexOf(b));
}
bool Cpdag::HasDirected(std::string_view from, std::string_view to) const {
  return directed(IndexOf(from), IndexOf(to));
}
bool Cpdag::HasUndirected(std::string_view a, std::string_view b) const {
  return undirected(IndexOf(a), IndexOf(b));
}

std::vector<Cpdag::Edge> Cpdag::Edges() const {
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < size(); ++a) {
    for (std::size_t b = 0; b < size(); ++b) {
      if (directed(a, b)) {
        edges.push_back({names_[a], names_[b], true});
      } else if (undirected(a, b) && names_[a] < names_[b]) {
        edges.push_back({names_[a], names_[b], false});
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.from, x.to) < std::tie(y.from, y.to);
  });
  return edges;
}

std::size_t Cpdag::EdgeCount() const { return Edges().size(); }

bool Cpdag::IsFullyDirected() const {
  for (const Edge& e : Edges()) {
    if (!e.directed) return false;
  }
  return true;
}

void Cpdag::Validate() const {
  // Kahn over directed edges only.
  const std::size_t p = size();
  std::vector<std::size_t> indegree(p, 0);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      if (directed(a, b)) ++indegree[b];
    }
  }
  std::vector<std::size_t> ready;
  for (std::size_t a = 0; a < p; ++a) {
    if (indegree[a] == 0) ready.push_back(a);
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    const std::size_t a = ready.back();
    ready.pop_back();
    ++seen;
    for (std::size_t b = 0; b < p; ++b) {
      if (directed(a, b) && --indegree[b] == 0) ready.push_back(b);
    }
  }
  if (seen != p) throw ValidationError("graph has a directed cycle");
}

std::string Cpdag::ToText() const {
  std::vector<std::string> lines;
  for (const Edge& e : Edges()) {
    lines.push_back(e.from + (e.directed ? " -> " : " -- ") + e.to);
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const std::string& l : lines) out += l + "\n";
  return out;
}

Cpdag ParseCpdag(std::string_view text, std::vector<std::string> variables) {
  struct Parsed {
    std::string a;
    std::string b;
    bool directed;
    std::size_t line;
    std::size_t offset;
  };
  std::vector<Parsed> parsed;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (!line.empty()) {
      std::size_t op = line.find("->");
      bool directed = true;
      if (op == std::string_view::npos) {
        op = line.find("--");
        directed = false;
      }
      if (op == std::string_view::npos) {
        throw ParseError("expected 'A -> B' or 'A -- B'", start, line_no);
      }
      const std::string a(Trim(line.substr(0, op)));
      const std::string b(Trim(line.substr(op + 2)));
      if (a.empty() || b.empty() ||
          a.find_first_of(" \t") != std::string::npos ||
          b.find_first_of(" \t") != std::string::npos) {
        throw ParseError("malformed edge '" + std::string(line) + "'", start,
                         line_no);
      }
      if (a == b) throw ParseError("self-loop on '" + a + "'", start, line_no);
      parsed.push_back({a, b, directed, line_no, start});
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  std::set<std::string> known(variables.begin(), variables.end());
  for (const Parsed& p : parsed) {
    for (const std::string& n : {p.a, p.b}) {
      if (known.insert(n).second) variables.push_back(n);
    }
  }
  Cpdag cpdag(std::move(variables));
  for (const Parsed& p : parsed) {
    if (cpdag.Adjacent(p.a, p.b)) {
      throw ParseError("duplicate edge between '" + p.a + "' and '" + p.b + "'",
                       p.offset, p.line);
    }
    if (p.directed) {
      cpdag.SetDirected(p.a, p.b);
    } else {
      cpdag.SetUndirected(p.a, p.b);
    }
  }
  cpdag.Validate();
  return cpdag;
}

void SepsetTable::Set(std::string_view a, std::string_view b,
                      std::vector<std::string> sepset) {
  std::sort(sepset.begin(), sepset.end());
  table_[Key(a, b)] = std::move(sepset);
}

const std::vector<std::string>* SepsetTable::Find(std::string_view a,
                                                  std::string_view b) const {
  const auto it = table_.find(Key(a, b));
  return it == table_.end() ? nullptr : &it->second;
}

FisherZ::FisherZ(const Dataset& data)
    : names_(data.columns()), n_(data.rows()) {
  const std::size_t p = data.cols();
  if (n_ < 4) {
    throw DataError("independence tests need at least 4 rows, got " +
                    std::to_string(n_));
  }
  Eigen::MatrixXd x(n_, p);
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data(r, c);
    }
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = x.transpose() * x;
  corr_.resize(p * p);
  for (std::size_t i = 0; i < p; ++i) {
    const double vi = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    if (!(vi > 0.0)) {
      throw DataError("column '" + names_[i] + "' is constant");
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      corr_[i * p + j] =
          i == j ? 1.0 : cov(ii, jj) / std::sqrt(cov(ii, ii) * cov(jj, jj));
    }
  }
  // Exact symmetry, so a test does not depend on argument order.
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < i; ++j) corr_[i * p + j] = corr_[j * p + i];
  }
}

CiTestResult FisherZ::Test(std::size_t i, std::size_t j,
                           std::span<const std::size_t> s, double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("alpha must be in (0, 1)");
  }
  if (n_ <= s.size() + 3) {
    throw DataError("Fisher-z test needs n > |S| + 3 (n = " +
                    std::to_string(n_) + ", |S| = " + std::to_string(s.size()) +
                    ")");
  }
  const std::size_t p = names_.size();
  std::vector<std::size_t> idx = {std::min(i, j), std::max(i, j)};
  idx.insert(idx.end(), s.begin(), s.end());
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      sub(a, b) = corr_[idx[static_cast<std::size_t>(a)] * p +
                        idx[static_cast<std::size_t>(b)]];
    }
  }
  double r;
  if (s.empty()) {
    r = sub(0, 1);
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
      throw ComputeError("singular correlation submatrix testing '" +
                         names_[i] + "' and '" + names_[j] + "'");
    }
    const Eigen::MatrixXd inv = lu.inverse();
    r = -inv(0, 1) / std::sqrt(inv(0, 0) * inv(1, 1));
  }
  CiTestResult out;
  out.partial_correlation = r;
  const double threshold = boost::math::quantile(
      boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
  if (std::abs(r) >= 1.0) {
    out.statistic = std::numeric_limits<double>::infinity();
  } else {
    const double z = 0.5 * std::log((1.0 + r) / (1.0 - r));
    out.statistic =
        std::sqrt(static_cast<double>(n_ - s.size() - 3)) * std::abs(z);
  }
  out.independent = out.statistic <= threshold;
  return out;
}

CiTestResult FisherZTest(const Dataset& data, std::string_view i,
                         std::string_view j, std::span<const std::string> s,
                         double alpha) {
  std::vector<std::string> names = {std::string(i), std::string(j)};
  names.insert(names.end(), s.begin(), s.end());
  const FisherZ test(data.Select(names));
  std::vector<std::size_t> cond(s.size());
  std::iota(cond.begin(), cond.end(), std::size_t{2});
  return test.Test(0, 1, cond, alpha);
}

SkeletonResult PcSkeleton(const Dataset& data, double alpha, int max_cond) {
  if (data.cols() < 2) {
    throw ValidationError("structure learning needs at least 2 variables");
  }
  if (max_cond < 0) throw ValidationError("max_cond must be >= 0");
  const FisherZ test(data);
  const std::vector<std::string>& names = data.columns();
  const std::size_t p = names.size();

  // Indices in name order.
  std::vector<std::size_t> by_name(p);
  std::iota(by_name.begin(), by_name.end(), std::size_t{0});
  std::sort(by_name.begin(), by_name.end(),
            [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });

  SkeletonResult result{Cpdag(names), {}, 0};
  Cpdag& g = result.skeleton;
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) g.SetUndirected(a, b);
  }

  for (int level = 0; level <= max_cond; ++level) {
    const auto l = static_cast<std::size_t>(level);
    std::vector<std::vector<std::size_t>> frozen(p);
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b : by_name) {
        if (g.adjacent(a, b)) frozen[a].push_back(b);
      }
    }
    bool any = false;
    for (std::size_t ia = 0; ia < p; ++ia) {
      for (std::size_t ib = ia + 1; ib < p; ++ib) {
        const std::size_t a = by_name[ia];
        const std::size_t b = by_name[ib];
        if (!g.adjacent(a, b)) continue;
        for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
          // With an empty conditioning set both directions run one test.
          if (l == 0 && x == b) break;
          std::vector<std::size_t> pool;
          for (std::size_t c : frozen[x]) {
            if (c != y) pool.push_back(c);
          }
          if (pool.size() < l) continue;
          any = true;
          const bool removed =
              ForEachSubset(pool, l, [&](const std::vector<std::size_t>& s) {
                ++result.tests;
                if (!test.Test(a, b, s, alpha).independent) return false;
                std::vector<std::string> sepset;
                for (std::size_t c : s) sepset.push_back(names[c]);
                g.Remove(a, b);
                result.sepsets.Set(names[a], names[b], std::move(sepset));
                return true;
              });
          if (removed) break;
        }
      }
    }
    if (!any) break;
  }
  return result;
}

namespace {

bool MeekApplies(const Cpdag& g, std::size_t a, std::size_t b) {
  const std::size_t p = g.size();
  for (std::size_t c = 0; c < p; ++c) {
    if (c == a || c == b) continue;
    // R1: c -> a - b, c and b not adjacent.
    if (g.directed(c, a) && !g.adjacent(c, b)) return true;
    // R2: a -> c -> b.
    if (g.directed(a, c) && g.directed(c, b)) return true;
  }
  for (std::size_t c = 0; c < p; ++c) {
    if (c == a || c == b) continue;
    for (std::size_t d = c + 1; d < p; ++d) {
      if (d == a || d == b) continue;
      // R3: a - c -> b, a - d -> b, c and d not adjacent.
      if (g.undirected(a, c) && g.undirected(a, d) && g.directed(c, b) &&
          g.directed(d, b) && !g.adjacent(c, d)) {
        return true;
      }
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    if (c == a || c == b || !g.undirected(a, c) || g.adjacent(c, b)) continue;
    for (std::size_t d = 0; d < p; ++d) {
      if (d == a || d == b || d == c) continue;
      // R4: a - c -> d -> b, a adjacent to d, c and b not adjacent.
      if (g.directed(c, d) && g.directed(d, b) && g.adjacent(a, d)) return true;
    }
  }
  return false;
}

}  // namespace

Cpdag OrientCpdag(const Cpdag& skeleton, const SepsetTable& sepsets) {
  const std::size_t p = skeleton.size();
  const auto& names = skeleton.variables();
  Cpdag g(names);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) {
      if (skeleton.adjacent(a, b)) g.SetUndirected(a, b);
    }
  }

  std::vector<std::vector<bool>> proposed(p, std::vector<bool>(p, false));
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        if (i == k || j == k || !g.adjacent(i, k) || !g.adjacent(j, k) ||
            g.adjacent(i, j)) {
          continue;
        }
        const std::vector<std::string>* sepset = sepsets.Find(names[i], names[j]);
        if (sepset == nullptr) {
          throw ValidationError("no separating set recorded for '" + names[i] +
                                "' and '" + names[j] + "'");
        }
        if (std::find(sepset->begin(), sepset->end(), names[k]) ==
            sepset->end()) {
          proposed[i][k] = proposed[j][k] = true;
        }
      }
    }
  }

  std::vector<std::vector<bool>> locked(p, std::vector<bool>(p, false));
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) {
      if (proposed[a][b] && proposed[b][a]) {
        locked[a][b] = locked[b][a] = true;
        g.AddConflict("conflicting v-structure orientations on " + names[a] +
                      " -- " + names[b]);
      }
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      if (proposed[a][b] && !locked[a][b]) g.SetDirected(a, b);
    }
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a < p && !changed; ++a) {
      for (std::size_t b = 0; b < p && !changed; ++b) {
        if (a == b || !g.undirected(a, b) || locked[a][b]) continue;
        if (MeekApplies(g, a, b)) {
          g.SetDirected(a, b);
          changed = true;
        }
      }
    }
  }
  return g;
}

std::vector<std::string> Dag::Parents(std::string_view variable) const {
  std::vector<std::string> parents;
  for (const std::string& v : variables) {
    if (HasEdge(v, variable)) parents.push_back(v);
  }
  return parents;
}

bool Dag::HasEdge(std::string_view from, std::string_view to) const {
  return std::find_if(edges.begin(), edges.end(), [&](const auto& e) {
           return e.first == from && e.second == to;
         }) != edges.end();
}

std::string Dag::ToText() const {
  std::string out;
  for (const auto& [from, to] : edges) out += from + " -> " + to + "\n";
  return out;
}

Dag ToDag(const Cpdag& cpdag) {
  Dag dag{cpdag.variables(), {}};
  for (const Cpdag::Edge& e : cpdag.Edges()) {
    if (!e.directed) {
      throw ValidationError("edge " + e.from + " -- " + e.to +
                            " is undirected");
    }
    dag.edges.emplace_back(e.from, e.to);
  }
  cpdag.Validate();
  return dag;
}

Dag RemoveEdge(Dag dag, std::string_view a, std::string_view b) {
  const auto it = std::find_if(dag.edges.begin(), dag.edges.end(),
                               [&](const auto& e) {
                                 return (e.first == a && e.second == b) ||
                                        (e.first == b && e.second == a);
                               });
  if (it == dag.edges.end()) {
    throw ValidationError("no edge between '" + std::string(a) + "' and '" +
                          std::string(b) + "'");
  }
  dag.edges.erase(it);
  return dag;
}

Dag DropVariable(Dag dag, std::string_view variable) {
  const auto it = std::find(dag.variables.begin(), dag.variables.end(), variable);
  if (it == dag.variables.end()) {
    throw ValidationError("unknown graph variable '" + std::string(variable) +
                          "'");
  }
  dag.variables.erase(it);
  std::erase_if(dag.edges, [&](const auto& e) {
    return e.first == variable || e.second == variable;
  });
  return dag;
}

DagEnumeration EnumerateDags(const Cpdag& cpdag, std::size_t cap) {
  if (cap < 1) throw ValidationError("DAG enumeration cap must be >= 1");
  cpdag.Validate();
  const std::size_t p = cpdag.size();
  const auto& names = cpdag.variables();

  std::vector<std::pair<std::size_t, std::size_t>> open;  // (smaller, larger)
  std::vector<std::vector<bool>> dir(p, std::vector<bool>(p, false));
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      if (cpdag.directed(a, b)) dir[a][b] = true;
      if (cpdag.undirected(a, b) && names[a] < names[b]) open.emplace_back(a, b);
    }
  }
  std::sort(open.begin(), open.end(), [&](const auto& x, const auto& y) {
    return std::tie(names[x.first], names[x.second]) <
           std::tie(names[y.first], names[y.second]);
  });

  auto reaches = [&](std::size_t from, std::size_t to) {
    std::vector<bool> seen(p, false);
    std::vector<std::size_t> stack = {from};
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (v == to) return true;
      if (seen[v]) continue;
      seen[v] = true;
      for (std::size_t w = 0; w < p; ++w) {
        if (dir[v][w] && !seen[w]) stack.push_back(w);
      }
    }
    return false;
  };
  auto new_collider = [&](std::size_t u, std::size_t v) {
    for (std::size_t w = 0; w < p; ++w) {
      if (w == u || !dir[w][v] || cpdag.adjacent(w, u)) continue;
      if (cpdag.undirected(w, v)) return true;
    }
    return false;
  };

  DagEnumeration result;
  std::function<bool(std::size_t)> assign = [&](std::size_t k) -> bool {
    if (k == open.size()) {
      if (result.dags.size() == cap) {
        result.truncated = true;
        return true;
      }
      Dag dag{names, {}};
      for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) {
          if (dir[a][b]) dag.edges.emplace_back(names[a], names[b]);
        }
      }
      std::sort(dag.edges.begin(), dag.edges.end());
      result.dags.push_back(std::move(dag));
      return false;
    }
    const auto [lo, hi] = open[k];
    for (auto [u, v] : {std::pair{lo, hi}, std::pair{hi, lo}}) {
      if (reaches(v, u) || new_collider(u, v)) continue;
      dir[u][v] = true;
      const bool stop = assign(k + 1);
      dir[u][v] = false;
      if (stop) return true;
    }
    return false;
  };
  assign(0);
  return result;
}

Scm FitAnm(const Dag& dag, const Dataset& data, int degree, std::string name) {
  if (degree < 1) throw ValidationError("ANM degree must be >= 1");
  ScmSpec spec;
  spec.name = std::move(name);
  for (const std::string& v : dag.variables) {
    data.ColumnIndex(v);
    VariableSpec var;
    var.name = v;
    var.mechanism.parents = dag.Parents(v);
    const std::vector<double> y = data.Column(v);
    if (var.mechanism.parents.empty()) {
      const double mean =
          std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
      var.mechanism.noise = NoiseSpec::Normal(mean, SampleSd(y, mean));
    } else {
      const auto ols = FitOls(data, v, var.mechanism.parents, degree);
      const std::vector<double> fitted = ols->Predict(data);
      std::vector<double> residual(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - fitted[i];
      var.mechanism.equation = ols->ToExpression();
      var.mechanism.noise = NoiseSpec::Normal(0.0, SampleSd(residual, 0.0));
    }
    spec.variables.push_back(std::move(var));
  }
  return Scm::Validate(std::move(spec));
}

}  // namespace cdp
