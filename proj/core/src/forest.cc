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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cdp/error.h"
#include "cdp/predictor.h"
#include "cdp/rng.h"

namespace cdp {
namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = -std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<double>& y,
              const ForestConfig& config, int mtry, SplitMix64& rng)
      : x_(x), y_(y), config_(config), mtry_(mtry), rng_(rng) {}

  ForestPredictor::Tree Build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    tree_.clear();
    struct Pending {
      int node;
      std::size_t begin;
      std::size_t end;
      int depth;
    };
    tree_.push_back({});
    std::vector<Pending> stack = {{0, 0, rows_.size(), 0}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const std::size_t count = p.end - p.begin;
      double sum = 0.0;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t k = p.begin; k < p.end; ++k) {
        const double v = y_[rows_[k]];
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      tree_[p.node].value = std::clamp(sum / static_cast<double>(count), lo, hi);
      const auto min_leaf = static_cast<std::size_t>(config_.min_leaf);
      if (p.depth >= config_.max_depth || count < 2 * min_leaf || lo == hi) {
        continue;
      }
      const Split split = FindSplit(p.begin, p.end);
      if (split.feature < 0) continue;

      const auto mid = std::stable_partition(
          rows_.begin() + static_cast<std::ptrdiff_t>(p.begin),
          rows_.begin() + static_cast<std::ptrdiff_t>(p.end),
          [&](std::size_t r) {
            return x_(r, static_cast<std::size_t>(split.feature)) <=
                   split.threshold;
          });
      const std::size_t cut = static_cast<std::size_t>(mid - rows_.begin());
      const int left = static_cast<int>(tree_.size());
      tree_.push_back({});
      tree_.push_back({});
      ForestPredictor::Node& node = tree_[p.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, cut, p.end, p.depth + 1});
      stack.push_back({left, p.begin, cut, p.depth + 1});
    }
    return tree_;
  }

 private:
  // Tries features in random order. The first `mtry` are always evaluated;
  // further ones only until some valid split has been seen.
  Split FindSplit(std::size_t begin, std::size_t end) {
    std::vector<int> order(x_.cols());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    Split best;
    const std::size_t count = end - begin;
    const auto min_leaf = static_cast<std::size_t>(config_.min_leaf);
    std::vector<std::pair<double, double>> xy(count);
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (static_cast<int>(k) >= mtry_ && best.feature >= 0) break;
      const auto f = static_cast<std::size_t>(order[k]);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t r = rows_[begin + i];
        xy[i] = {x_(r, f), y_[r]};
      }
      std::sort(xy.begin(), xy.end());
      double total = 0.0;
      for (const auto& [xv, yv] : xy) total += yv;
      double left_sum = 0.0;
      for (std::size_t s = 1; s < count; ++s) {
        left_sum += xy[s - 1].second;
        if (s < min_leaf || count - s < min_leaf) continue;
        if (!(xy[s - 1].first < xy[s].first)) continue;
        const double nl = static_cast<double>(s);
        const double nr = static_cast<double>(count - s);
        const double right_sum = total - left_sum;
        const double gain =
            left_sum * left_sum / nl + right_sum * right_sum / nr;
        if (gain > best.gain) {
          double threshold =
              xy[s - 1].first + (xy[s].first - xy[s - 1].first) / 2.0;
          if (!(threshold < xy[s].first)) threshold = xy[s - 1].first;
          best = {order[k], threshold, gain};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const std::vector<double>& y_;
  const ForestConfig& config_;
  int mtry_;
  SplitMix64& rng_;
  std::vector<std::size_t> rows_;
  ForestPredictor::Tree tree_;
};

double PredictTree(const ForestPredictor::Tree& tree,
                   std::span<const double> x) {
  int node = 0;
  while (tree[static_cast<std::size_t>(node)].feature >= 0) {
    const ForestPredictor::Node& n = tree[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                  : n.right;
  }
  return tree[static_cast<std::size_t>(node)].value;
}

}  // namespace

void ForestConfig::Validate() const {
  if (trees < 1) throw ValidationError("forest tree count must be >= 1");
  if (max_depth < 1) throw ValidationError("forest max depth must be >= 1");
  if (min_leaf < 1) throw ValidationError("forest min leaf must be >= 1");
  if (features_per_split < 0) {
    throw ValidationError("forest features per split must be >= 0");
  }
}

ForestPredictor::ForestPredictor(std::vector<std::string> features,
                                 ForestConfig config, std::vector<Tree> trees)
    : Predictor(std::move(features)),
      config_(config),
      trees_(std::move(trees)) {
  if (trees_.empty()) throw ValidationError("forest has no trees");
  for (const Tree& tree : trees_) {
    for (const Node& node : tree) {
      if (node.feature >= static_cast<int>(this->features().size())) {
        throw ValidationError("forest node references an unknown feature");
      }
      if (node.feature >= 0 &&
          (node.left <= 0 || node.right <= 0 ||
           node.left >= static_cast<int>(tree.size()) ||
           node.right >= static_cast<int>(tree.size()))) {
        throw ValidationError("forest node has invalid children");
      }
    }
  }
}

std::string ForestPredictor::Describe() const {
  return "forest(trees=" + std::to_string(trees_.size()) +
         ", depth=" + std::to_string(config_.max_depth) + ")";
}

std::vector<double> ForestPredictor::PredictRows(const Matrix& rows) const {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Tree& tree : trees_) {
      const double v = PredictTree(tree, rows.row(i));
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out[i] = std::clamp(sum / static_cast<double>(trees_.size()), lo, hi);
  }
  return out;
}

std::shared_ptr<const ForestPredictor> FitForest(
    const Dataset& data, std::string_view target,
    const std::vector<std::string>& features, const ForestConfig& config) {
  config.Validate();
  if (features.empty()) throw ValidationError("empty feature set");
  const std::size_t n = data.rows();
  if (n < 2 * static_cast<std::size_t>(config.min_leaf)) {
    throw DataError("forest needs at least 2*min_leaf = " +
                    std::to_string(2 * config.min_leaf) + " rows, got " +
                    std::to_string(n));
  }
  const Matrix x = data.Select(features).values();
  const std::vector<double> y = data.Column(target);
  const int p = static_cast<int>(features.size());
  const int mtry = config.features_per_split == 0
                       ? (p + 2) / 3
                       : std::min(config.features_per_split, p);

  std::vector<ForestPredictor::Tree> trees;
  trees.reserve(static_cast<std::size_t>(config.trees));
  for (int t = 0; t < config.trees; ++t) {
    SplitMix64 rng(SubstreamSeed(config.seed, static_cast<std::uint64_t>(t), 0));
    std::vector<std::size_t> rows(n);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    TreeBuilder builder(x, y, config, mtry, rng);
    trees.push_back(builder.Build(std::move(rows)));
  }
  return std::make_shared<const ForestPredictor>(features, config,
                                                 std::move(trees));
}

}  // namespace cdp
