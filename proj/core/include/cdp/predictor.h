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

// The black-box model being explained. Everything downstream sees only
// Predictor::Predict; the concrete learners exist so that the examples can be
// reproduced without outside tooling.

#ifndef CDP_PREDICTOR_H_
#define CDP_PREDICTOR_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "cdp/dataset.h"
#include "cdp/expr.h"

namespace cdp {

enum class PredictorKind { kOls, kForest, kExternal, kClosedForm };

std::string_view PredictorKindName(PredictorKind kind);

class Predictor {
 public:
  virtual ~Predictor() = default;

  // Feature names in the order Predict expects its columns.
  const std::vector<std::string>& features() const { return features_; }

  virtual PredictorKind kind() const = 0;
  virtual std::string Describe() const = 0;

  // One prediction per row; `rows` has one column per feature, in features()
  // order. Throws ComputeError if any prediction is not finite.
  std::vector<double> Predict(const Matrix& rows) const;
  // Selects the feature columns by name; DataError if one is missing.
  std::vector<double> Predict(const Dataset& data) const;

 protected:
  explicit Predictor(std::vector<std::string> features);

  virtual std::vector<double> PredictRows(const Matrix& rows) const = 0;

 private:
  std::vector<std::string> features_;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

// Least squares on all monomials of the features up to total degree `degree`
// plus an intercept.
class OlsPredictor : public Predictor {
 public:
  // Exponent vector per design column (excluding the intercept).
  using Monomial = std::vector<int>;

  OlsPredictor(std::vector<std::string> features, int degree, double intercept,
               std::vector<Monomial> monomials,
               std::vector<double> coefficients, bool ridge_used = false);

  PredictorKind kind() const override { return PredictorKind::kOls; }
  std::string Describe() const override;

  int degree() const { return degree_; }
  double intercept() const { return intercept_; }
  const std::vector<Monomial>& monomials() const { return monomials_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  bool ridge_used() const { return ridge_used_; }

  // Coefficient of the given monomial; 0 when it is not a design column.
  double Coefficient(const Monomial& monomial) const;

  // intercept + sum_k c_k * monomial_k as an expression over features().
  expr::Expression ToExpression() const;

 protected:
  std::vector<double> PredictRows(const Matrix& rows) const override;

 private:
  int degree_;
  double intercept_;
  std::vector<Monomial> monomials_;
  std::vector<double> coefficients_;
  bool ridge_used_;
};

// All exponent vectors over `k` variables with 1 <= total degree <= `degree`,
// ordered by total degree, then lexicographically descending.
std::vector<OlsPredictor::Monomial> EnumerateMonomials(std::size_t k,
                                                       int degree);

// Throws DataError for missing columns, ComputeError if the fit is not finite.
// A numerically singular Gram matrix (condition estimate > 1e12) is solved
// with a 1e-8 ridge penalty instead of failing.
std::shared_ptr<const OlsPredictor> FitOls(const Dataset& data,
                                           std::string_view target,
                                           const std::vector<std::string>&
                                               features,
                                           int degree);

struct ForestConfig {
  int trees = 100;
  int max_depth = 8;
  int min_leaf = 5;
  // 0 selects ceil(p / 3).
  int features_per_split = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Bagged regression trees (CART, variance reduction splits).
class ForestPredictor : public Predictor {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  ForestPredictor(std::vector<std::string> features, ForestConfig config,
                  std::vector<Tree> trees);

  PredictorKind kind() const override { return PredictorKind::kForest; }
  std::string Describe() const override;

  const ForestConfig& config() const { return config_; }
  const std::vector<Tree>& trees() const { return trees_; }

 protected:
  std::vector<double> PredictRows(const Matrix& rows) const override;

 private:
  ForestConfig config_;
  std::vector<Tree> trees_;
};

// A constant target yields a constant predictor.
std::shared_ptr<const ForestPredictor> FitForest(
    const Dataset& data, std::string_view target,
    const std::vector<std::string>& features, const ForestConfig& config);

// A known formula over the features.
class ClosedFormPredictor : public Predictor {
 public:
  // Throws ValidationError if the equation uses a name outside `features`.
  ClosedFormPredictor(expr::Expression equation,
                      std::vector<std::string> features);

  PredictorKind kind() const override { return PredictorKind::kClosedForm; }
  std::string Describe() const override;
  const expr::Expression& equation() const { return equation_; }

 protected:
  std::vector<double> PredictRows(const Matrix& rows) const override;

 private:
  expr::Expression equation_;
  expr::Program program_;
};

// Features default to the equation's free variables in sorted order.
std::shared_ptr<const ClosedFormPredictor> MakeClosedForm(
    std::string_view equation, std::vector<std::string> features = {});

struct ExternalOptions {
  std::chrono::milliseconds timeout{30000};
};

// Proxies Predict to a subprocess over a line protocol on its stdin/stdout:
//
//   engine    -> HELLO CDP/1 <k> <f1,f2,...,fk>
//   predictor -> READY
//   engine    -> PREDICT <n>, then n lines of k comma-separated floats
//   predictor -> n lines, one float each
//   engine    -> QUIT
//
// Floats are written with 17 significant digits. Calls are serialized on one
// subprocess session. Exiting before QUIT, malformed replies and missed
// deadlines raise ProtocolError.
class ExternalPredictor : public Predictor {
 public:
  ExternalPredictor(std::string command, std::vector<std::string> features,
                    ExternalOptions options = {});
  ~ExternalPredictor() override;

  ExternalPredictor(const ExternalPredictor&) = delete;
  ExternalPredictor& operator=(const ExternalPredictor&) = delete;

  PredictorKind kind() const override { return PredictorKind::kExternal; }
  std::string Describe() const override;
  const std::string& command() const { return command_; }
  const ExternalOptions& options() const { return options_; }

 protected:
  std::vector<double> PredictRows(const Matrix& rows) const override;

 private:
  class Session;

  std::string command_;
  ExternalOptions options_;
  mutable std::mutex mutex_;
  std::unique_ptr<Session> session_;
};

std::shared_ptr<const ExternalPredictor> OpenExternal(
    std::string command, std::vector<std::string> features,
    ExternalOptions options = {});

// JSON persistence for fitted predictors (external ones store their command
// and are re-spawned on load).
std::string SavePredictor(const Predictor& predictor);
PredictorPtr LoadPredictor(std::string_view json);

}  // namespace cdp

#endif  // CDP_PREDICTOR_H_
