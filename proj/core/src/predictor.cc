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

#include "cdp/predictor.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "cdp/error.h"
#include "json.hpp"

namespace cdp {
namespace {

using Json = nlohmann::json;

constexpr double kSingularCondition = 1e12;
constexpr double kRidge = 1e-8;

double MonomialValue(const OlsPredictor::Monomial& monomial,
                     std::span<const double> x) {
  double v = 1.0;
  for (std::size_t f = 0; f < monomial.size(); ++f) {
    for (int e = 0; e < monomial[f]; ++e) v *= x[f];
  }
  return v;
}

expr::Expression MonomialExpression(const OlsPredictor::Monomial& monomial,
                                    const std::vector<std::string>& features) {
  std::optional<expr::Expression> out;
  for (std::size_t f = 0; f < monomial.size(); ++f) {
    if (monomial[f] == 0) continue;
    expr::Expression term = expr::Expression::Variable(features[f]);
    if (monomial[f] > 1) {
      term = expr::Expression::Binary(
          expr::BinaryOp::kPow, term,
          expr::Expression::Constant(static_cast<double>(monomial[f])));
    }
    out = out ? expr::Expression::Binary(expr::BinaryOp::kMul, *out, term)
              : term;
  }
  return out ? *out : expr::Expression::Constant(1.0);
}

void CheckFeatures(const Dataset& data, std::string_view target,
                   const std::vector<std::string>& features) {
  if (features.empty()) throw ValidationError("empty feature set");
  data.ColumnIndex(target);
  std::set<std::string_view> seen;
  for (const std::string& f : features) {
    data.ColumnIndex(f);
    if (!seen.insert(f).second) {
      throw ValidationError("duplicate feature '" + f + "'");
    }
    if (f == target) {
      throw ValidationError("target '" + f + "' is also a feature");
    }
  }
}

}  // namespace

std::string_view PredictorKindName(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::kOls:
      return "ols";
    case PredictorKind::kForest:
      return "forest";
    case PredictorKind::kExternal:
      return "external";
    case PredictorKind::kClosedForm:
      return "closed_form";
  }
  return "unknown";
}

Predictor::Predictor(std::vector<std::string> features)
    : features_(std::move(features)) {}

std::vector<double> Predictor::Predict(const Matrix& rows) const {
  if (rows.cols() != features_.size()) {
    throw DataError("predictor expects " + std::to_string(features_.size()) +
                    " feature columns, got " + std::to_string(rows.cols()));
  }
  std::vector<double> out = PredictRows(rows);
  if (out.size() != rows.rows()) {
    throw ComputeError("predictor returned " + std::to_string(out.size()) +
                       " values for " + std::to_string(rows.rows()) + " rows");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      throw ComputeError("non-finite prediction at row " + std::to_string(i) +
                         " from " + Describe());
    }
  }
  return out;
}

std::vector<double> Predictor::Predict(const Dataset& data) const {
  return Predict(data.Select(features_).values());
}

std::vector<OlsPredictor::Monomial> EnumerateMonomials(std::size_t k,
                                                       int degree) {
  std::vector<OlsPredictor::Monomial> out;
  OlsPredictor::Monomial current(k, 0);
  for (int total = 1; total <= degree; ++total) {
    // Exponent vectors of fixed total, lexicographically descending.
    std::function<void(std::size_t, int)> fill = [&](std::size_t pos,
                                                     int left) {
      if (pos + 1 == k) {
        current[pos] = left;
        out.push_back(current);
        return;
      }
      for (int e = left; e >= 0; --e) {
        current[pos] = e;
        fill(pos + 1, left - e);
      }
    };
    if (k > 0) fill(0, total);
  }
  return out;
}

OlsPredictor::OlsPredictor(std::vector<std::string> features, int degree,
                           double intercept, std::vector<Monomial> monomials,
                           std::vector<double> coefficients, bool ridge_used)
    : Predictor(std::move(features)),
      degree_(degree),
      intercept_(intercept),
      monomials_(std::move(monomials)),
      coefficients_(std::move(coefficients)),
      ridge_used_(ridge_used) {
  if (monomials_.size() != coefficients_.size()) {
    throw ValidationError("OLS monomial/coefficient count mismatch");
  }
  for (const Monomial& m : monomials_) {
    if (m.size() != this->features().size()) {
      throw ValidationError("OLS monomial width does not match features");
    }
  }
}

std::string OlsPredictor::Describe() const {
  return "ols(degree=" + std::to_string(degree_) + ")";
}

double OlsPredictor::Coefficient(const Monomial& monomial) const {
  for (std::size_t k = 0; k < monomials_.size(); ++k) {
    if (monomials_[k] == monomial) return coefficients_[k];
  }
  return 0.0;
}

expr::Expression OlsPredictor::ToExpression() const {
  expr::Expression out = expr::Expression::Constant(intercept_);
  for (std::size_t k = 0; k < monomials_.size(); ++k) {
    const double c = coefficients_[k];
    const expr::Expression term =
        expr::Expression::Binary(expr::BinaryOp::kMul,
                                 expr::Expression::Constant(std::fabs(c)),
                                 MonomialExpression(monomials_[k], features()));
    out = expr::Expression::Binary(
        std::signbit(c) ? expr::BinaryOp::kSub : expr::BinaryOp::kAdd, out,
        term);
  }
  return out;
}

std::vector<double> OlsPredictor::PredictRows(const Matrix& rows) const {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const std::span<const double> x = rows.row(i);
    double y = intercept_;
    for (std::size_t k = 0; k < monomials_.size(); ++k) {
      y += coefficients_[k] * MonomialValue(monomials_[k], x);
    }
    out[i] = y;
  }
  return out;
}

std::shared_ptr<const OlsPredictor> FitOls(
    const Dataset& data, std::string_view target,
    const std::vector<std::string>& features, int degree) {
  CheckFeatures(data, target, features);
  if (degree < 1) throw ValidationError("OLS degree must be >= 1");
  const std::size_t n = data.rows();
  const std::vector<OlsPredictor::Monomial> monomials =
      EnumerateMonomials(features.size(), degree);
  const std::size_t q = monomials.size();
  if (n < 2) throw DataError("OLS needs at least 2 rows");

  const Matrix x = data.Select(features).values();
  const std::vector<double> y = data.Column(target);

  // Centered and scaled design; the intercept is recovered afterwards.
  Eigen::MatrixXd z(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      z(i, k) = MonomialValue(monomials[k], x.row(i));
    }
  }
  const Eigen::RowVectorXd mean = z.colwise().mean();
  z.rowwise() -= mean;
  Eigen::VectorXd scale(q);
  for (std::size_t k = 0; k < q; ++k) {
    const double sd = std::sqrt(z.col(k).squaredNorm() / n);
    scale(k) = sd > 0.0 ? sd : 1.0;
    z.col(k) /= scale(k);
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const double y_mean = yv.mean();
  const Eigen::VectorXd yc = yv.array() - y_mean;

  const Eigen::MatrixXd gram = z.transpose() * z / static_cast<double>(n);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      gram, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  const bool singular = !(lmin > 0.0) || lmax / lmin > kSingularCondition;

  Eigen::VectorXd beta;
  if (singular) {
    const Eigen::MatrixXd ridged =
        gram + kRidge * Eigen::MatrixXd::Identity(q, q);
    beta = ridged.ldlt().solve(z.transpose() * yc / static_cast<double>(n));
  } else {
    beta = z.colPivHouseholderQr().solve(yc);
  }
  if (!beta.allFinite()) {
    throw ComputeError("OLS fit for '" + std::string(target) +
                       "' did not converge");
  }

  std::vector<double> coefficients(q);
  double intercept = y_mean;
  for (std::size_t k = 0; k < q; ++k) {
    coefficients[k] = beta(k) / scale(k);
    intercept -= coefficients[k] * mean(k);
  }
  return std::make_shared<const OlsPredictor>(features, degree, intercept,
                                              monomials,
                                              std::move(coefficients),
                                              singular);
}

ClosedFormPredictor::ClosedFormPredictor(expr::Expression equation,
                                         std::vector<std::string> features)
    : Predictor(std::move(features)), equation_(std::move(equation)) {
  const auto& names = this->features();
  program_ = expr::Program::Compile(
      equation_, [&](std::string_view v) -> std::optional<expr::Slot> {
        const auto it = std::find(names.begin(), names.end(), v);
        if (it == names.end()) return std::nullopt;
        return expr::Slot{0, static_cast<std::uint32_t>(it - names.begin())};
      });
}

std::string ClosedFormPredictor::Describe() const {
  return "closed_form(" + expr::ToString(equation_) + ")";
}

std::vector<double> ClosedFormPredictor::PredictRows(const Matrix& rows) const {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = program_.Run(rows.row(i));
  return out;
}

std::shared_ptr<const ClosedFormPredictor> MakeClosedForm(
    std::string_view equation, std::vector<std::string> features) {
  expr::Expression e = expr::Parse(equation);
  if (features.empty()) {
    const std::set<std::string> vars = expr::FreeVariables(e);
    features.assign(vars.begin(), vars.end());
  }
  for (const std::string& v : expr::FreeVariables(e)) {
    if (std::find(features.begin(), features.end(), v) == features.end()) {
      throw ValidationError("closed-form equation uses '" + v +
                            "', which is not a feature");
    }
  }
  return std::make_shared<const ClosedFormPredictor>(std::move(e),
                                                     std::move(features));
}

std::string SavePredictor(const Predictor& predictor) {
  Json j;
  j["kind"] = PredictorKindName(predictor.kind());
  j["features"] = predictor.features();
  switch (predictor.kind()) {
    case PredictorKind::kOls: {
      const auto& p = static_cast<const OlsPredictor&>(predictor);
      j["degree"] = p.degree();
      j["intercept"] = p.intercept();
      j["monomials"] = p.monomials();
      j["coefficients"] = p.coefficients();
      j["ridge_used"] = p.ridge_used();
      break;
    }
    case PredictorKind::kForest: {
      const auto& p = static_cast<const ForestPredictor&>(predictor);
      const ForestConfig& c = p.config();
      j["config"] = {{"trees", c.trees},
                     {"max_depth", c.max_depth},
                     {"min_leaf", c.min_leaf},
                     {"features_per_split", c.features_per_split},
                     {"bootstrap", c.bootstrap},
                     {"seed", c.seed}};
      Json trees = Json::array();
      for (const ForestPredictor::Tree& tree : p.trees()) {
        Json t;
        for (const ForestPredictor::Node& node : tree) {
          t["feature"].push_back(node.feature);
          t["threshold"].push_back(node.threshold);
          t["left"].push_back(node.left);
          t["right"].push_back(node.right);
          t["value"].push_back(node.value);
        }
        trees.push_back(std::move(t));
      }
      j["trees"] = std::move(trees);
      break;
    }
    case PredictorKind::kClosedForm:
      j["equation"] = expr::ToString(
          static_cast<const ClosedFormPredictor&>(predictor).equation());
      break;
    case PredictorKind::kExternal: {
      const auto& p = static_cast<const ExternalPredictor&>(predictor);
      j["command"] = p.command();
      j["timeout_ms"] = p.options().timeout.count();
      break;
    }
  }
  return j.dump(1) + "\n";
}

PredictorPtr LoadPredictor(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    auto features = j.at("features").get<std::vector<std::string>>();
    if (kind == "ols") {
      return std::make_shared<const OlsPredictor>(
          std::move(features), j.at("degree").get<int>(),
          j.at("intercept").get<double>(),
          j.at("monomials").get<std::vector<OlsPredictor::Monomial>>(),
          j.at("coefficients").get<std::vector<double>>(),
          j.value("ridge_used", false));
    }
    if (kind == "forest") {
      const Json& c = j.at("config");
      ForestConfig config;
      config.trees = c.at("trees").get<int>();
      config.max_depth = c.at("max_depth").get<int>();
      config.min_leaf = c.at("min_leaf").get<int>();
      config.features_per_split = c.at("features_per_split").get<int>();
      config.bootstrap = c.at("bootstrap").get<bool>();
      config.seed = c.at("seed").get<std::uint64_t>();
      std::vector<ForestPredictor::Tree> trees;
      for (const Json& t : j.at("trees")) {
        const auto feature = t.at("feature").get<std::vector<int>>();
        const auto threshold = t.at("threshold").get<std::vector<double>>();
        const auto left = t.at("left").get<std::vector<int>>();
        const auto right = t.at("right").get<std::vector<int>>();
        const auto value = t.at("value").get<std::vector<double>>();
        ForestPredictor::Tree tree(feature.size());
        for (std::size_t k = 0; k < tree.size(); ++k) {
          tree[k] = {feature.at(k), threshold.at(k), left.at(k), right.at(k),
                     value.at(k)};
        }
        trees.push_back(std::move(tree));
      }
      return std::make_shared<const ForestPredictor>(
          std::move(features), config, std::move(trees));
    }
    if (kind == "closed_form") {
      return MakeClosedForm(j.at("equation").get<std::string>(),
                            std::move(features));
    }
    if (kind == "external") {
      ExternalOptions options;
      options.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
      return OpenExternal(j.at("command").get<std::string>(),
                          std::move(features), options);
    }
    throw ValidationError("unknown predictor kind '" + kind + "'");
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed predictor file: ") + e.what());
  }
}

}  // namespace cdp
