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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cdp/dataset.h"
#include "cdp/error.h"
#include "cdp/predictor.h"
#include "cdp/scm.h"
#include "cdp/scm_io.h"
#include "test_support.h"

namespace cdp {
namespace {

Scm Fixture(const std::string& name) {
  return LoadScm(testing::FixturePath(name));
}

Dataset Rows(std::vector<std::string> cols, std::vector<double> values) {
  const std::size_t k = cols.size();
  return Dataset(std::move(cols), Matrix(values.size() / k, k, values));
}

Grid MakeGridOf(std::string var, std::vector<double> values) {
  return Grid{std::move(var), std::move(values)};
}

// f = M^2 - 0.5 X^2 over the mediation model.
Ecm CorrectMediationEcm() {
  return BuildEcm(Fixture("mediation.scm"), MakeClosedForm("M^2 - 0.5*X^2"));
}

// All-affine model used for the decomposition property.
Scm AffineScm() {
  return Scm::Validate(ParseScmSpec(R"(scm affine
var A { noise = normal(0, 1) }
var B { parents = [A]; eq = "1 + 2*A"; noise = normal(0, 0.5) }
var C { parents = [A, B]; eq = "-1 + 0.5*A + 3*B"; noise = normal(0, 0.5) }
var D { parents = [C]; eq = "0.25*C"; noise = normal(0, 1) }
)"));
}

Scm NullScm() {
  return Scm::Validate(ParseScmSpec(R"(scm null
var A { noise = normal(0, 1) }
var B { noise = uniform(-1, 2) }
var C { noise = normal(3, 0.5) }
)"));
}

void ExpectCurvesNear(const CurveSet& a, const CurveSet& b, double tol) {
  ASSERT_EQ(a.units(), b.units());
  ASSERT_EQ(a.grid.values, b.grid.values);
  for (std::size_t i = 0; i < a.units(); ++i) {
    for (std::size_t g = 0; g < a.grid.size(); ++g) {
      ASSERT_NEAR(a.at(i, g), b.at(i, g), tol) << "unit " << i << " g " << g;
    }
  }
}

TEST(BuildEcm, AddsPredictionNode) {
  const Scm salary = Fixture("salary.scm");
  const Dataset data = Sample(salary, 100, 1).data;
  const Ecm ecm = BuildEcm(salary, FitOls(data, "S", {"P", "F"}, 1));
  EXPECT_EQ(ecm.Parents(kPredictionNode),
            (std::vector<std::string>{"P", "F"}));
  const auto edges = ecm.Edges();
  EXPECT_NE(std::find(edges.begin(), edges.end(),
                      std::pair<std::string, std::string>{"F", "__yhat"}),
            edges.end());
  for (const auto& [from, to] : edges) EXPECT_NE(from, "__yhat");
  EXPECT_EQ(ecm.Nodes().size(), 4u);
  EXPECT_TRUE(ecm.prediction_noise() == NoiseSpec::PointMass(0.0));
  EXPECT_TRUE(ecm.scm() == salary);
}

TEST(BuildEcm, SingleFeatureAndErrors) {
  const Scm salary = Fixture("salary.scm");
  const Ecm only_f = BuildEcm(salary, MakeClosedForm("2*F"));
  EXPECT_EQ(only_f.Parents(kPredictionNode), (std::vector<std::string>{"F"}));
  EXPECT_THROW(BuildEcm(salary, MakeClosedForm("Q + P")), ValidationError);
  const Scm clash = Scm::Validate(ParseScmSpec(
      "scm clash\nvar __yhat { noise = normal(0, 1) }\n"));
  EXPECT_THROW(BuildEcm(clash, MakeClosedForm("__yhat")), ValidationError);
}

TEST(MakeGrid, OrdinalColumn) {
  std::vector<double> v;
  for (int rep = 0; rep < 3; ++rep) {
    for (int k = 10; k >= 1; --k) v.push_back(k);
  }
  const Grid g = MakeGrid(Rows({"A"}, v), "A", 40);
  EXPECT_EQ(g.values, (std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
}

TEST(MakeGrid, ContinuousColumn) {
  std::vector<double> v = {0.0, 1.5};
  for (int k = 1; k <= 20; ++k) v.push_back(0.07 * k);
  const Grid g = MakeGrid(Rows({"P"}, v), "P", 4);
  EXPECT_EQ(g.values, (std::vector<double>{0.0, 0.5, 1.0, 1.5}));
  EXPECT_EQ(MakeGrid(Rows({"P"}, v), "P").size(), 40u);
}

TEST(MakeGrid, Errors) {
  std::vector<double> v;
  for (int k = 0; k < 30; ++k) v.push_back(k);
  EXPECT_THROW(MakeGrid(Rows({"P"}, v), "P", 1), ValidationError);
  EXPECT_THROW(MakeGrid(Rows({"P"}, {2, 2, 2}), "P", 10), DataError);
  EXPECT_THROW(MakeGrid(Rows({"P"}, v), "Q", 10), DataError);
  EXPECT_THROW(MakeGridOf("P", {1, 1}).Validate(), ValidationError);
  EXPECT_THROW(MakeGridOf("P", {}).Validate(), ValidationError);
  EXPECT_THROW(MakeGridOf("P", {2, 1}).Validate(), ValidationError);
}

TEST(Ice, ConstantPredictorIsFlat) {
  const auto p = MakeClosedForm("5 + 0*X", {"X"});
  const CurveSet c = Ice(*p, Rows({"X"}, {1, 2, 3}), "X",
                         MakeGridOf("X", {-1, 0, 4}));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t g = 0; g < 3; ++g) EXPECT_EQ(c.at(i, g), 5.0);
  }
}

TEST(Ice, PdpIsTheUnitMean) {
  const auto p = MakeClosedForm("X + Z");
  const CurveSet c =
      Ice(*p, Rows({"X", "Z"}, {0, 1, 0, 3}), "X", MakeGridOf("X", {0}));
  EXPECT_EQ(c.at(0, 0), 1.0);
  EXPECT_EQ(c.at(1, 0), 3.0);
  EXPECT_EQ(c.mean[0], 2.0);
}

TEST(Ice, ClosedFormValue) {
  const auto p = MakeClosedForm("M^2 - 0.5*X^2");
  const CurveSet c =
      Ice(*p, Rows({"X", "M"}, {-3, 2}), "X", MakeGridOf("X", {2}));
  EXPECT_EQ(c.at(0, 0), 2.0);
  EXPECT_THROW(Ice(*p, Rows({"X", "M", "Q"}, {0, 0, 0}), "Q",
                   MakeGridOf("Q", {1})),
               ValidationError);
}

TEST(Tdp, ClosedFormPropagation) {
  // u_M = 0.5 - 0.5 * 1^3 = 0.
  const Dataset unit = Rows({"X", "M", "Y"}, {1.0, 0.5, 0.0});
  const CurveSet c =
      Tdp(CorrectMediationEcm(), unit, "X", MakeGridOf("X", {2}));
  EXPECT_DOUBLE_EQ(c.at(0, 0), 14.0);
  EXPECT_EQ(c.metadata.intervention, "do(X=x)");
}

// Factual prediction of each unit.
std::vector<double> Factual(const Ecm& ecm, const Dataset& data) {
  return ecm.predictor().Predict(data);
}

TEST(Tdp, FactualAnchoring) {
  for (const char* name : {"salary.scm", "mediation.scm"}) {
    const Scm scm = Fixture(name);
    const Dataset data = Sample(scm, 60, 5).data;
    const std::string target = scm.variables().back();
    std::vector<std::string> features(scm.variables().begin(),
                                      scm.variables().end() - 1);
    const Ecm ecm = BuildEcm(scm, FitOls(data, target, features, 2));
    const std::vector<double> factual = Factual(ecm, data);
    for (const std::string& var : features) {
      const Grid grid = MakeGrid(data, var, 11).With(data.Column(var));
      for (const CurveSet& c : {Tdp(ecm, data, var, grid),
                                Nddp(ecm, data, var, grid)}) {
        for (std::size_t i = 0; i < data.rows(); ++i) {
          const std::size_t g = grid.Find(data(i, data.ColumnIndex(var)));
          ASSERT_NE(g, Grid::npos);
          EXPECT_NEAR(c.at(i, g), factual[i], 1e-9) << name << " " << var;
        }
      }
    }
  }
}

TEST(Tdp, NullGraphCollapse) {
  const Scm scm = NullScm();
  const Dataset data = Sample(scm, 40, 3).data;
  const Ecm ecm = BuildEcm(scm, MakeClosedForm("A^2*B + sin(C) - A*C"));
  for (const std::string var : {"A", "B", "C"}) {
    const Grid grid = MakeGrid(data, var, 9);
    const CurveSet ice = Ice(ecm.predictor(), data, var, grid);
    const CurveSet tdp = Tdp(ecm, data, var, grid);
    const CurveSet nddp = Nddp(ecm, data, var, grid);
    const CurveSet nidp = Nidp(ecm, data, var, grid);
    ExpectCurvesNear(tdp, ice, 1e-12);
    ExpectCurvesNear(nddp, ice, 1e-12);
    const std::vector<double> factual = Factual(ecm, data);
    for (std::size_t i = 0; i < data.rows(); ++i) {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        EXPECT_EQ(nidp.at(i, g), nidp.at(i, 0));
      }
      EXPECT_NEAR(nidp.at(i, 0), factual[i], 1e-12);
    }
  }
}

TEST(Pcdp, ControlledDirectEffect) {
  const Ecm ecm = CorrectMediationEcm();
  const Dataset data = Sample(ecm.scm(), 25, 2).data;
  const CurveSet c =
      Pcdp(ecm, data, "X", MakeGridOf("X", {0, 2}), Intervention::Do("M", 0));
  for (std::size_t i = 0; i < data.rows(); ++i) {
    EXPECT_EQ(c.at(i, 1), -2.0);
    EXPECT_EQ(c.at(i, 0), 0.0);
  }
  const EffectDifference d = ComputeEffectDifference(c, 0.0, 2.0);
  EXPECT_NEAR(d.mean, -2.0, 1e-12);
  for (double u : d.units) EXPECT_NEAR(u, -2.0, 1e-12);
}

TEST(Pcdp, FullControlGivesCoefficientSlope) {
  const Scm salary = Fixture("salary.scm");
  const Dataset data = Sample(salary, 80, 4).data;
  const auto ols = FitOls(data, "S", {"P", "F"}, 1);
  const Ecm ecm = BuildEcm(salary, ols);
  const CurveSet c = Pcdp(ecm, data, "P", MakeGridOf("P", {0, 0.5, 1, 1.5}),
                          Intervention::Do("F", 1.0));
  const double b = ols->Coefficient({1, 0});
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t g = 1; g < 4; ++g) {
      EXPECT_NEAR(c.at(i, g) - c.at(i, g - 1), 0.5 * b, 1e-12);
    }
  }
  const EffectDifference d = ComputeEffectDifference(c, 0.0, 1.0);
  for (double u : d.units) EXPECT_NEAR(u, b, 1e-12);
}

TEST(Pcdp, EmptyControlEqualsTdpAndErrors) {
  const Ecm ecm = CorrectMediationEcm();
  const Dataset data = Sample(ecm.scm(), 30, 6).data;
  const Grid grid = MakeGrid(data, "X", 7);
  EXPECT_EQ(Pcdp(ecm, data, "X", grid, Intervention()).values,
            Tdp(ecm, data, "X", grid).values);
  EXPECT_THROW(Pcdp(ecm, data, "X", grid, Intervention::Do("X", 1)),
               ValidationError);
  Intervention sever;
  sever.Add(SeverIncoming{"M"});
  EXPECT_THROW(Pcdp(ecm, data, "X", grid, sever), ValidationError);
}

TEST(Nddp, Proposition1OnRandomModels) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const testing::RandomEcmSpec spec = testing::MakeRandomEcmSpec(seed);
    const Scm scm = Scm::Validate(spec.scm);
    const Ecm ecm = BuildEcm(scm, MakeClosedForm(spec.predictor_equation));
    const Dataset data = Sample(scm, 50, seed + 1000).data;
    for (const std::string& var : ecm.predictor().features()) {
      const Grid grid = MakeGrid(data, var, 21);
      ExpectCurvesNear(Nddp(ecm, data, var, grid),
                       Ice(ecm.predictor(), data, var, grid), 1e-9);
    }
  }
}

TEST(Nddp, SalaryLinearSlope) {
  const Scm salary = Fixture("salary.scm");
  const Dataset data = Sample(salary, 200, 8).data;
  const auto ols = FitOls(data, "S", {"P", "F"}, 1);
  const CurveSet c = Nddp(BuildEcm(salary, ols), data, "P",
                          MakeGridOf("P", {0, 0.75, 1.5}));
  const double b = ols->Coefficient({1, 0});
  EXPECT_NEAR(c.mean[1] - c.mean[0], 0.75 * b, 1e-12);
  EXPECT_NEAR(c.mean[2] - c.mean[1], 0.75 * b, 1e-12);
}

TEST(Nddp, LeafVariableMatchesTdp) {
  const Scm salary = Fixture("salary.scm");
  const Dataset data = Sample(salary, 50, 9).data;
  const Ecm ecm = BuildEcm(salary, MakeClosedForm("F*S + P"));
  const Grid grid = MakeGrid(data, "S", 8);
  ExpectCurvesNear(Nddp(ecm, data, "S", grid), Tdp(ecm, data, "S", grid),
                   1e-12);
}

TEST(Nidp, LeafVariableIsConstantAtFactual) {
  const Scm salary = Fixture("salary.scm");
  const Dataset data = Sample(salary, 50, 10).data;
  const Ecm ecm = BuildEcm(salary, MakeClosedForm("F*S + P"));
  const CurveSet c = Nidp(ecm, data, "S", MakeGrid(data, "S", 8));
  const std::vector<double> factual = Factual(ecm, data);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t g = 0; g < c.grid.size(); ++g) {
      EXPECT_NEAR(c.at(i, g), factual[i], 1e-12);
    }
  }
}

TEST(Nidp, TwoStageHandPropagation) {
  // x = 1, u_M = 1 so m = 1.5.
  const Dataset unit = Rows({"X", "M", "Y"}, {1.0, 1.5, 0.0});
  const CurveSet c =
      Nidp(CorrectMediationEcm(), unit, "X", MakeGridOf("X", {0, 2}));
  EXPECT_DOUBLE_EQ(c.at(0, 0), 0.5);
  // At x = 2: m = 4 + 1 = 5 and X stays at 1.
  EXPECT_DOUBLE_EQ(c.at(0, 1), 24.5);
  EXPECT_FALSE(c.metadata.notes.empty());
}

TEST(Nidp, AffineDecomposition) {
  const Scm scm = AffineScm();
  const Dataset data = Sample(scm, 60, 12).data;
  const Ecm ecm = BuildEcm(scm, MakeClosedForm("2 + A - 2*B + 0.5*C + 3*D"));
  for (const std::string var : {"A", "B", "C"}) {
    const Grid grid = MakeGrid(data, var, 15);
    const CurveSet tdp = Tdp(ecm, data, var, grid);
    const CurveSet nddp = Nddp(ecm, data, var, grid);
    const CurveSet nidp = Nidp(ecm, data, var, grid);
    for (std::size_t i = 0; i < data.rows(); ++i) {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const double lhs = tdp.at(i, g) - tdp.at(i, 0);
        const double rhs = (nddp.at(i, g) - nddp.at(i, 0)) +
                           (nidp.at(i, g) - nidp.at(i, 0));
        ASSERT_NEAR(lhs, rhs, 1e-9) << var;
      }
    }
  }
}

TEST(Engine, MeanInvariantAndThreadDeterminism) {
  const Scm salary = Fixture("salary.scm");
  const Dataset data = Sample(salary, 120, 13).data;
  ForestConfig cfg;
  cfg.trees = 10;
  const Ecm ecm = BuildEcm(salary, FitForest(data, "S", {"P", "F"}, cfg));
  const Grid grid = MakeGrid(data, "P", 17);
  ComputeOptions four;
  four.threads = 4;
  for (PlotKind kind : {PlotKind::kIce, PlotKind::kTdp, PlotKind::kPcdp,
                        PlotKind::kNddp, PlotKind::kNidp}) {
    const Intervention control = kind == PlotKind::kPcdp
                                     ? Intervention::Do("F", 2.0)
                                     : Intervention();
    const CurveSet one = ComputeCurves(kind, ecm, data, "P", grid, control);
    const CurveSet many =
        ComputeCurves(kind, ecm, data, "P", grid, control, four);
    EXPECT_NO_THROW(one.Validate());
    EXPECT_EQ(one.values, many.values);
    EXPECT_EQ(one.mean, many.mean);
    const std::vector<double> recomputed = ColumnMeans(one.values);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      EXPECT_NEAR(one.mean[g], recomputed[g], 1e-12);
    }
  }
}

TEST(EffectDifference, SamePointAndMissingValue) {
  const Ecm ecm = CorrectMediationEcm();
  const Dataset data = Sample(ecm.scm(), 10, 1).data;
  const CurveSet c = Tdp(ecm, data, "X", MakeGridOf("X", {0, 1}));
  const EffectDifference d = ComputeEffectDifference(c, 1.0, 1.0);
  EXPECT_EQ(d.mean, 0.0);
  for (double u : d.units) EXPECT_EQ(u, 0.0);
  EXPECT_THROW(ComputeEffectDifference(c, 0.0, 0.5), ValidationError);
}

TEST(UncertaintyBand, IdenticalModelsGiveZeroWidth) {
  const Ecm ecm = CorrectMediationEcm();
  const Dataset data = Sample(ecm.scm(), 30, 1).data;
  const std::vector<Ecm> ecms = {ecm, ecm};
  const BandSet band = UncertaintyBand(ecms, data, "X",
                                       MakeGrid(data, "X", 9), PlotKind::kTdp);
  EXPECT_EQ(band.MaxWidth(), 0.0);
}

TEST(UncertaintyBand, SalaryMediationVersusNoMediation) {
  const Scm med = Fixture("salary.scm");
  const Scm nomed = Fixture("salary_nomed.scm");
  const Dataset data = Sample(med, 500, 7).data;
  const auto ols = FitOls(data, "S", {"P", "F"}, 1);
  const std::vector<Ecm> ecms = {BuildEcm(med, ols, "mediation"),
                                 BuildEcm(nomed, ols, "no-mediation")};
  const Grid grid = MakeGrid(data, "P", 20).With(std::vector<double>{1.4});
  const BandSet tdp = UncertaintyBand(ecms, data, "P", grid, PlotKind::kTdp);
  const BandSet nddp =
      UncertaintyBand(ecms, data, "P", grid, PlotKind::kNddp);
  EXPECT_GT(tdp.MaxWidth(), 0.0);
  EXPECT_LT(nddp.MaxWidth(), 1e-9);
  EXPECT_EQ(tdp.labels, (std::vector<std::string>{"mediation", "no-mediation"}));
  const std::size_t g = grid.Find(1.4);
  EXPECT_GT(tdp.curves(0, g), tdp.curves(1, g));
  for (const BandSet* b : {&tdp, &nddp}) {
    EXPECT_NO_THROW(b->Validate());
    for (std::size_t m = 0; m < b->models(); ++m) {
      for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_LE(b->lower[k], b->curves(m, k));
        EXPECT_GE(b->upper[k], b->curves(m, k));
      }
    }
  }
}

TEST(UncertaintyBand, Errors) {
  const Ecm ecm = CorrectMediationEcm();
  const Dataset data = Sample(ecm.scm(), 10, 1).data;
  const Grid grid = MakeGrid(data, "X", 5);
  const std::vector<Ecm> one = {ecm};
  EXPECT_THROW(UncertaintyBand(one, data, "X", grid, PlotKind::kTdp),
               ValidationError);
  const std::vector<Ecm> two = {ecm, ecm};
  EXPECT_THROW(UncertaintyBand(two, data, "X", grid, PlotKind::kIce),
               ValidationError);
  const Scm other = Scm::Validate(ParseScmSpec(R"(scm other
var X { noise = normal(0, 1) }
var M { parents = [X]; eq = "X"; noise = normal(0, 1) }
var Z { noise = normal(0, 1) }
)"));
  const std::vector<Ecm> mixed = {
      ecm, BuildEcm(other, MakeClosedForm("M^2 - 0.5*X^2"))};
  EXPECT_THROW(UncertaintyBand(mixed, data, "X", grid, PlotKind::kTdp),
               ValidationError);
}

TEST(PlotKind, Names) {
  EXPECT_EQ(PlotKindName(PlotKind::kNidp), "nidp");
  EXPECT_EQ(PlotKindFromName("TDP"), PlotKind::kTdp);
  EXPECT_THROW(PlotKindFromName("pdp2"), ValidationError);
}

}  // namespace
}  // namespace cdp
