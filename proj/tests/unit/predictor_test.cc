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

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cdp/dataset.h"
#include "cdp/error.h"
#include "cdp/scm.h"
#include "cdp/scm_io.h"
#include "test_support.h"

namespace cdp {
namespace {

using testing::LeastSquares;

std::string Echo(const std::string& mode = "sum") {
  return std::string("'") + CDP_ECHO_PATH + "' " + mode;
}

Dataset Table(std::vector<std::string> cols, std::vector<double> values) {
  const std::size_t k = cols.size();
  return Dataset(std::move(cols), Matrix(values.size() / k, k, values));
}

Dataset MediationData(std::size_t n, std::uint64_t seed) {
  return Sample(LoadScm(testing::FixturePath("mediation.scm")), n, seed).data;
}

TEST(Ols, ExactLineIsInterpolated) {
  std::vector<double> v;
  for (int i = 0; i < 20; ++i) {
    const double x = -1.0 + 0.37 * i;
    v.push_back(x);
    v.push_back(1.0 + 2.0 * x);
  }
  const auto ols = FitOls(Table({"x", "y"}, v), "y", {"x"}, 1);
  EXPECT_NEAR(ols->intercept(), 1.0, 1e-8);
  EXPECT_NEAR(ols->Coefficient({1}), 2.0, 1e-8);
  EXPECT_FALSE(ols->ridge_used());
}

TEST(Ols, SymmetricParabolaHasZeroSlope) {
  std::vector<double> v;
  for (int x = -2; x <= 2; ++x) {
    v.push_back(x);
    v.push_back(x * x);
  }
  const auto ols = FitOls(Table({"x", "y"}, v), "y", {"x"}, 1);
  EXPECT_NEAR(ols->Coefficient({1}), 0.0, 1e-8);
  EXPECT_NEAR(ols->intercept(), 2.0, 1e-8);
}

TEST(Ols, MatchesNormalEquationsOracle) {
  const Dataset data = MediationData(5000, 7);
  const auto ols = FitOls(data, "Y", {"X", "M"}, 1);
  std::vector<std::vector<double>> design;
  std::vector<double> y;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    design.push_back({1.0, data(i, 0), data(i, 1)});
    y.push_back(data(i, 2));
  }
  const std::vector<double> beta = LeastSquares(design, y);
  EXPECT_NEAR(ols->intercept(), beta[0], 1e-8 * (1 + std::abs(beta[0])));
  EXPECT_NEAR(ols->Coefficient({1, 0}), beta[1],
              1e-8 * (1 + std::abs(beta[1])));
  EXPECT_NEAR(ols->Coefficient({0, 1}), beta[2],
              1e-8 * (1 + std::abs(beta[2])));
  for (double c : ols->coefficients()) EXPECT_TRUE(std::isfinite(c));
  // Same data, same fit, bit for bit.
  const auto again = FitOls(data, "Y", {"X", "M"}, 1);
  EXPECT_EQ(again->coefficients(), ols->coefficients());
  EXPECT_EQ(again->intercept(), ols->intercept());
}

TEST(Ols, QuadraticMatchesOracle) {
  const Dataset data = MediationData(2000, 3);
  const auto ols = FitOls(data, "Y", {"X", "M"}, 2);
  const std::vector<std::vector<int>> mono = EnumerateMonomials(2, 2);
  ASSERT_EQ(mono.size(), 5u);
  std::vector<std::vector<double>> design;
  std::vector<double> y;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    std::vector<double> row = {1.0};
    for (const auto& m : mono) {
      row.push_back(std::pow(data(i, 0), m[0]) * std::pow(data(i, 1), m[1]));
    }
    design.push_back(row);
    y.push_back(data(i, 2));
  }
  const std::vector<double> beta = LeastSquares(design, y);
  EXPECT_NEAR(ols->intercept(), beta[0], 1e-6);
  for (std::size_t k = 0; k < mono.size(); ++k) {
    EXPECT_NEAR(ols->Coefficient(mono[k]), beta[k + 1],
                1e-6 * (1 + std::abs(beta[k + 1])));
  }
  // Y = M^2 - 0.5 X^2 + noise is inside the degree-2 family.
  EXPECT_NEAR(ols->Coefficient({0, 2}), 1.0, 0.05);
  EXPECT_NEAR(ols->Coefficient({2, 0}), -0.5, 0.05);
}

TEST(Ols, MonomialOrder) {
  const std::vector<std::vector<int>> expected = {
      {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(EnumerateMonomials(2, 2), expected);
  EXPECT_EQ(EnumerateMonomials(3, 3).size(), 19u);
}

TEST(Ols, ResidualsOrthogonalToDesign) {
  const Dataset data = MediationData(3000, 21);
  const auto ols = FitOls(data, "Y", {"X", "M"}, 3);
  const std::vector<double> pred = ols->Predict(data);
  std::vector<double> dots(ols->monomials().size() + 1, 0.0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double r = data(i, 2) - pred[i];
    dots[0] += r;
    for (std::size_t k = 0; k < ols->monomials().size(); ++k) {
      const auto& m = ols->monomials()[k];
      dots[k + 1] +=
          r * std::pow(data(i, 0), m[0]) * std::pow(data(i, 1), m[1]);
    }
  }
  for (double d : dots) EXPECT_LT(std::abs(d) / data.rows(), 1e-6);
}

TEST(Ols, RankDeficientFallsBackToRidge) {
  std::vector<double> v;
  for (int i = 0; i < 30; ++i) {
    v.push_back(i);
    v.push_back(2.0 * i);
    v.push_back(3.0 * i + 1.0);
  }
  const auto ols = FitOls(Table({"a", "b", "y"}, v), "y", {"a", "b"}, 1);
  EXPECT_TRUE(ols->ridge_used());
  const std::vector<double> pred = ols->Predict(Table({"a", "b"}, {4, 8}));
  EXPECT_NEAR(pred[0], 13.0, 1e-4);
}

TEST(Ols, ErrorsAndDirectPrediction) {
  const Dataset d = Table({"x", "y"}, {0, 1, 1, 3, 2, 5});
  EXPECT_THROW(FitOls(d, "y", {"z"}, 1), DataError);
  EXPECT_THROW(FitOls(d, "y", {"x"}, 0), ValidationError);
  EXPECT_THROW(FitOls(d, "y", {}, 1), ValidationError);
  const OlsPredictor manual({"x"}, 1, 1.0, {{1}}, {2.0});
  EXPECT_EQ(manual.Predict(Table({"x"}, {3.0}))[0], 7.0);
  EXPECT_THROW(manual.Predict(Table({"z"}, {3.0})), DataError);
  EXPECT_THROW(manual.Predict(Matrix(1, 2)), DataError);
}

TEST(Forest, ConstantTarget) {
  std::vector<double> v;
  for (int i = 0; i < 40; ++i) {
    v.push_back(i * 0.1);
    v.push_back(3.0);
  }
  const auto f = FitForest(Table({"x", "y"}, v), "y", {"x"}, {});
  for (double p : f->Predict(Table({"x"}, {-5, 0, 1.5, 100}))) {
    EXPECT_EQ(p, 3.0);
  }
}

TEST(Forest, PredictionsWithinTargetRange) {
  const Dataset data = MediationData(800, 4);
  ForestConfig cfg;
  cfg.trees = 30;
  cfg.seed = 9;
  const auto f = FitForest(data, "Y", {"X", "M"}, cfg);
  const std::vector<double> y = data.Column("Y");
  const double lo = *std::min_element(y.begin(), y.end());
  const double hi = *std::max_element(y.begin(), y.end());
  for (double p : f->Predict(data)) {
    EXPECT_GE(p, lo);
    EXPECT_LE(p, hi);
  }
}

TEST(Forest, StepFunctionIsLearned) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v;
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng);
    v.push_back(x);
    v.push_back(x > 0 ? 1.0 : 0.0);
  }
  const Dataset data = Table({"x", "y"}, v);
  ForestConfig cfg;
  cfg.max_depth = 4;
  cfg.trees = 20;
  const auto f = FitForest(data, "y", {"x"}, cfg);
  const std::vector<double> p = f->Predict(data);
  double mse = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    mse += (p[i] - data(i, 1)) * (p[i] - data(i, 1));
  }
  EXPECT_LT(mse / p.size(), 0.05);
}

TEST(Forest, SingleFullTreeInterpolatesUniqueRows) {
  const Dataset data = MediationData(300, 12);
  ForestConfig cfg;
  cfg.trees = 1;
  cfg.bootstrap = false;
  cfg.max_depth = 64;
  cfg.min_leaf = 1;
  cfg.features_per_split = 2;
  const auto f = FitForest(data, "Y", {"X", "M"}, cfg);
  const std::vector<double> p = f->Predict(data);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], data(i, 2));
}

TEST(Forest, DeterministicAndThreadSafe) {
  const Dataset data = MediationData(500, 5);
  ForestConfig cfg;
  cfg.trees = 25;
  cfg.seed = 77;
  const auto a = FitForest(data, "Y", {"X", "M"}, cfg);
  const auto b = FitForest(data, "Y", {"X", "M"}, cfg);
  const std::vector<double> pa = a->Predict(data);
  EXPECT_EQ(pa, b->Predict(data));
  cfg.seed = 78;
  EXPECT_NE(pa, FitForest(data, "Y", {"X", "M"}, cfg)->Predict(data));
  std::vector<std::vector<double>> results(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] { results[t] = a->Predict(data); });
  }
  for (auto& th : threads) th.join();
  for (const auto& r : results) EXPECT_EQ(r, pa);
}

TEST(Forest, ConfigValidation) {
  const Dataset data = MediationData(50, 5);
  ForestConfig cfg;
  cfg.trees = 0;
  EXPECT_THROW(FitForest(data, "Y", {"X"}, cfg), ValidationError);
  cfg = {};
  cfg.max_depth = 0;
  EXPECT_THROW(FitForest(data, "Y", {"X"}, cfg), ValidationError);
  cfg = {};
  cfg.min_leaf = 0;
  EXPECT_THROW(FitForest(data, "Y", {"X"}, cfg), ValidationError);
  cfg = {};
  cfg.min_leaf = 30;
  EXPECT_THROW(FitForest(data, "Y", {"X"}, cfg), DataError);
  EXPECT_THROW(FitForest(data, "Y", {}, {}), ValidationError);
}

TEST(ClosedForm, WorkedValue) {
  const auto p = MakeClosedForm("M^2 - 0.5*X^2");
  EXPECT_EQ(p->features(), (std::vector<std::string>{"M", "X"}));
  EXPECT_EQ(p->Predict(Table({"X", "M"}, {2.0, 2.0}))[0], 2.0);
  EXPECT_THROW(MakeClosedForm("M + Z", {"M"}), ValidationError);
  EXPECT_THROW(MakeClosedForm("log(M)")->Predict(Table({"M"}, {0.0})),
               ComputeError);
}

TEST(Persistence, RoundTripPredictsIdentically) {
  const Dataset data = MediationData(300, 6);
  ForestConfig cfg;
  cfg.trees = 10;
  const std::vector<PredictorPtr> models = {
      FitOls(data, "Y", {"X", "M"}, 3), FitForest(data, "Y", {"X", "M"}, cfg),
      MakeClosedForm("M^2 - 0.5*X^2")};
  for (const PredictorPtr& m : models) {
    const PredictorPtr back = LoadPredictor(SavePredictor(*m));
    EXPECT_EQ(back->kind(), m->kind());
    EXPECT_EQ(back->features(), m->features());
    EXPECT_EQ(back->Predict(data), m->Predict(data));
  }
  EXPECT_THROW(LoadPredictor("{\"kind\": \"svm\"}"), ValidationError);
  EXPECT_THROW(LoadPredictor("not json"), ValidationError);
}

TEST(External, SumLoopback) {
  const auto p = OpenExternal(Echo(), {"a", "b", "c"});
  EXPECT_EQ(p->Predict(Table({"a", "b", "c"}, {1, 2, 3}))[0], 6.0);
  // Several batches over one session.
  const std::vector<double> many =
      p->Predict(Table({"a", "b", "c"}, {0.1, 0.2, 0.3, -1, -2, -3.5}));
  EXPECT_EQ(many[0], 0.1 + 0.2 + 0.3);
  EXPECT_EQ(many[1], -6.5);
}

TEST(External, IdentityOnSingleFeature) {
  const auto p = OpenExternal(Echo(), {"x"});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1e3);
  std::vector<double> xs;
  for (int i = 0; i < 5000; ++i) xs.push_back(n(rng));
  xs.push_back(1.0 / 3.0);
  xs.push_back(-0.0);
  xs.push_back(5e-324);
  EXPECT_EQ(p->Predict(Table({"x"}, xs)), xs);
}

void ExpectProtocolError(const std::function<void()>& body,
                         const std::string& fragment) {
  try {
    body();
    ADD_FAILURE() << "expected ProtocolError containing '" << fragment << "'";
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos)
        << e.what();
    EXPECT_EQ(e.code(), ErrorCode::kExternal);
  }
}

TEST(External, WrongRowCountNamesExpectedAndActual) {
  const auto p = OpenExternal(Echo("wrong-rows"), {"x"});
  ExpectProtocolError([&] { p->Predict(Table({"x"}, {1, 2})); },
                      "expected 2 line(s)");
}

TEST(External, HangTimesOutAtDeadline) {
  const auto p = OpenExternal(Echo("hang"), {"x"},
                              {std::chrono::milliseconds(300)});
  const auto start = std::chrono::steady_clock::now();
  ExpectProtocolError([&] { p->Predict(Table({"x"}, {1})); },
                      "timed out after 300 ms");
  const auto took = std::chrono::steady_clock::now() - start;
  EXPECT_GE(took, std::chrono::milliseconds(300));
  EXPECT_LT(took, std::chrono::milliseconds(5000));
}

TEST(External, CrashBeforeQuit) {
  const auto p = OpenExternal(Echo("crash"), {"x"});
  ExpectProtocolError([&] { p->Predict(Table({"x"}, {1})); },
                      "exited with status 3");
}

TEST(External, HandshakeMismatch) {
  ExpectProtocolError([&] { OpenExternal(Echo("bad-handshake"), {"x"}); },
                      "handshake mismatch");
}

TEST(External, SpawnFailure) {
  ExpectProtocolError(
      [&] { OpenExternal("/nonexistent/predictor-binary", {"x"}); },
      "handshake");
}

}  // namespace
}  // namespace cdp
