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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cdp/dataset.h"
#include "cdp/error.h"
#include "cdp/expr.h"
#include "test_support.h"

namespace cdp {
namespace {

VariableSpec Var(std::string name, std::vector<std::string> parents,
                 const std::string& equation, NoiseSpec noise) {
  VariableSpec v;
  v.name = std::move(name);
  v.mechanism.parents = std::move(parents);
  if (!equation.empty()) v.mechanism.equation = expr::Parse(equation);
  v.mechanism.noise = noise;
  return v;
}

ScmSpec SalarySpec() {
  return {"salary",
          {Var("P", {}, "", NoiseSpec::Uniform(0.0, 1.5)),
           Var("F", {"P"}, "2*P^3", NoiseSpec::Normal(0.0, 0.2)),
           Var("S", {"F", "P"}, "F - P^2", NoiseSpec::Normal(0.0, 0.2))}};
}

ScmSpec MediationSpec() {
  return {"mediation",
          {Var("X", {}, "", NoiseSpec::Normal(0.0, 1.0)),
           Var("M", {"X"}, "0.5*X^3", NoiseSpec::Normal(0.0, 1.0)),
           Var("Y", {"M", "X"}, "M^2 - 0.5*X^2", NoiseSpec::Normal(0.0, 1.0))}};
}

Dataset Row(const std::vector<std::string>& cols, std::vector<double> v) {
  return Dataset(cols, Matrix(1, cols.size(), std::move(v)));
}

std::vector<std::string> TopoNames(const Scm& scm) {
  std::vector<std::string> out;
  for (std::size_t i : scm.topological_order()) {
    out.push_back(scm.variables()[i]);
  }
  return out;
}

TEST(ScmValidate, SalaryTopologicalOrder) {
  const Scm scm = Scm::Validate(SalarySpec());
  EXPECT_EQ(TopoNames(scm), (std::vector<std::string>{"P", "F", "S"}));
  EXPECT_EQ(scm.EdgeCount(), 3u);
  EXPECT_TRUE(scm.HasEdge("P", "F"));
  EXPECT_FALSE(scm.HasEdge("F", "P"));
}

TEST(ScmValidate, TopologicalOrderIgnoresDeclarationOrder) {
  ScmSpec spec = SalarySpec();
  std::reverse(spec.variables.begin(), spec.variables.end());
  const Scm scm = Scm::Validate(spec);
  EXPECT_EQ(TopoNames(scm), (std::vector<std::string>{"P", "F", "S"}));
}

TEST(ScmValidate, CycleIsReported) {
  const ScmSpec spec = {"cyclic",
                        {Var("P", {"F"}, "F", NoiseSpec::Normal(0, 1)),
                         Var("F", {"P"}, "P", NoiseSpec::Normal(0, 1))}};
  try {
    Scm::Validate(spec);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("cycle"), std::string::npos);
    EXPECT_NE(msg.find("P"), std::string::npos);
    EXPECT_NE(msg.find("F"), std::string::npos);
  }
}

TEST(ScmValidate, EquationMustUseOnlyParents) {
  ScmSpec spec = SalarySpec();
  spec.variables[2].mechanism.parents = {"F"};
  try {
    Scm::Validate(spec);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'P'"), std::string::npos);
  }
}

TEST(ScmValidate, StructuralErrors) {
  ScmSpec undeclared = SalarySpec();
  undeclared.variables[1].mechanism.parents = {"Q"};
  EXPECT_THROW(Scm::Validate(undeclared), ValidationError);

  ScmSpec duplicate_parent = SalarySpec();
  duplicate_parent.variables[2].mechanism.parents = {"F", "P", "F"};
  EXPECT_THROW(Scm::Validate(duplicate_parent), ValidationError);

  ScmSpec duplicate_var = SalarySpec();
  duplicate_var.variables.push_back(duplicate_var.variables[0]);
  EXPECT_THROW(Scm::Validate(duplicate_var), ValidationError);

  ScmSpec self_loop = SalarySpec();
  self_loop.variables[0].mechanism.parents = {"P"};
  EXPECT_THROW(Scm::Validate(self_loop), ValidationError);
}

TEST(ScmValidate, NoiseParameters) {
  EXPECT_THROW(NoiseSpec::Normal(0, -1).Validate("X"), ValidationError);
  EXPECT_THROW(NoiseSpec::Uniform(2, 1).Validate("X"), ValidationError);
  EXPECT_THROW(NoiseSpec::Normal(NAN, 1).Validate("X"), ValidationError);
  EXPECT_NO_THROW(NoiseSpec::Normal(0, 0).Validate("X"));
  EXPECT_NO_THROW(NoiseSpec::Uniform(1, 1).Validate("X"));
  EXPECT_TRUE(NoiseSpec::Normal(3, 0).IsDegenerate());
  EXPECT_TRUE(NoiseSpec::Uniform(1, 1).IsDegenerate());
  EXPECT_FALSE(NoiseSpec::Normal(0, 1).IsDegenerate());
}

TEST(ScmSample, UniformSupport) {
  const Scm scm = Scm::Validate(SalarySpec());
  const SampleResult r = Sample(scm, 1000, 3);
  ASSERT_EQ(r.data.rows(), 1000u);
  for (double p : r.data.Column("P")) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.5);
  }
}

TEST(ScmSample, SameSeedIsByteIdentical) {
  const Scm scm = Scm::Validate(SalarySpec());
  const SampleResult a = Sample(scm, 500, 42);
  const SampleResult b = Sample(scm, 500, 42);
  EXPECT_EQ(FormatCsv(a.data), FormatCsv(b.data));
  EXPECT_EQ(FormatCsv(a.noise), FormatCsv(b.noise));
  EXPECT_NE(FormatCsv(Sample(scm, 500, 43).data), FormatCsv(a.data));
}

TEST(ScmSample, UnitStreamsDoNotDependOnSampleSize) {
  const Scm scm = Scm::Validate(MediationSpec());
  const SampleResult small = Sample(scm, 10, 9);
  const SampleResult large = Sample(scm, 100, 9);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(small.data(i, c), large.data(i, c));
    }
  }
}

TEST(ScmSample, MediationMeansNearZero) {
  const Scm scm = Scm::Validate(MediationSpec());
  const SampleResult r = Sample(scm, 10000, 11);
  for (const char* name : {"X", "M"}) {
    const std::vector<double> v = r.data.Column(name);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= (v.size() - 1);
    const double stderr_ = std::sqrt(var / v.size());
    EXPECT_LT(std::abs(mean), 3.0 * stderr_) << name;
  }
}

TEST(ScmSample, ZeroUnitsRejected) {
  EXPECT_THROW(Sample(Scm::Validate(SalarySpec()), 0, 1), ValidationError);
}

TEST(ScmSample, DegenerateNoiseIsExact) {
  const ScmSpec spec = {"flat",
                        {Var("A", {}, "", NoiseSpec::Normal(2.5, 0.0)),
                         Var("B", {"A"}, "3*A", NoiseSpec::Uniform(1, 1))}};
  const SampleResult r = Sample(Scm::Validate(spec), 50, 1);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(r.data(i, 0), 2.5);
    EXPECT_EQ(r.data(i, 1), 8.5);
  }
}

// Normal and uniform CDFs written out independently of NoiseSpec::Cdf.
double OracleCdf(const NoiseSpec& n, double x) {
  if (n.kind == NoiseSpec::Kind::kNormal) {
    return 0.5 * std::erfc(-(x - n.a) / (n.b * std::sqrt(2.0)));
  }
  if (x <= n.a) return 0.0;
  if (x >= n.b) return 1.0;
  return (x - n.a) / (n.b - n.a);
}

double KsStatistic(std::vector<double> v, const NoiseSpec& n) {
  std::sort(v.begin(), v.end());
  const double m = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = OracleCdf(n, v[i]);
    d = std::max({d, (i + 1) / m - f, f - i / m});
  }
  return d;
}

TEST(ScmProperty, RootMarginalsPassKolmogorovSmirnov) {
  const ScmSpec spec = {"roots",
                        {Var("U", {}, "", NoiseSpec::Uniform(-1.0, 3.0)),
                         Var("N", {}, "", NoiseSpec::Normal(1.0, 2.0)),
                         Var("C", {"U", "N"}, "U*N", NoiseSpec::Normal(0, 1))}};
  const Scm scm = Scm::Validate(spec);
  const std::size_t n = 10000;
  const double critical = 1.6276 / std::sqrt(static_cast<double>(n));
  int pass_u = 0;
  int pass_n = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SampleResult r = Sample(scm, n, seed);
    pass_u += KsStatistic(r.data.Column("U"), spec.variables[0].mechanism
                                                  .noise) < critical;
    pass_n += KsStatistic(r.data.Column("N"), spec.variables[1].mechanism
                                                  .noise) < critical;
  }
  EXPECT_GE(pass_u, 95);
  EXPECT_GE(pass_n, 95);
}

TEST(ScmAbduct, MediationUnit) {
  const Scm scm = Scm::Validate(MediationSpec());
  const NoiseDataset u = Abduct(scm, Row({"X", "M", "Y"}, {2.0, 5.0, 0.0}));
  EXPECT_DOUBLE_EQ(u(0, u.ColumnIndex("M")), 1.0);
  EXPECT_DOUBLE_EQ(u(0, u.ColumnIndex("X")), 2.0);
}

TEST(ScmAbduct, SalaryUnit) {
  const Scm scm = Scm::Validate(SalarySpec());
  const NoiseDataset u = Abduct(scm, Row({"P", "F", "S"}, {1.0, 2.0, 1.5}));
  EXPECT_DOUBLE_EQ(u(0, u.ColumnIndex("F")), 0.0);
  EXPECT_DOUBLE_EQ(u(0, u.ColumnIndex("S")), 0.5);
}

TEST(ScmAbduct, ExtraColumnsIgnoredMissingRejected) {
  const Scm scm = Scm::Validate(SalarySpec());
  const NoiseDataset u =
      Abduct(scm, Row({"Z", "S", "P", "F"}, {9.0, 1.5, 1.0, 2.0}));
  EXPECT_EQ(u.columns(), (std::vector<std::string>{"P", "F", "S"}));
  EXPECT_THROW(Abduct(scm, Row({"P", "F"}, {1.0, 2.0})), DataError);
}

TEST(ScmProperty, AbductInvertsSampleBitwise) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const testing::RandomEcmSpec spec = testing::MakeRandomEcmSpec(seed);
    const Scm scm = Scm::Validate(spec.scm);
    const SampleResult r = Sample(scm, 200, seed);
    const NoiseDataset u = Abduct(scm, r.data);
    ASSERT_EQ(u.values().data(), r.noise.values().data()) << "seed " << seed;
  }
  const Scm salary = Scm::Validate(SalarySpec());
  const SampleResult r = Sample(salary, 1000, 5);
  EXPECT_EQ(Abduct(salary, r.data).values().data(), r.noise.values().data());
}

TEST(ScmIntervention, DoMakesRootConstant) {
  const Scm scm = Scm::Validate(SalarySpec());
  const Scm done = ApplyIntervention(scm, Intervention::Do("P", 1.0));
  const Mechanism& p = done.mechanism("P");
  EXPECT_TRUE(p.parents.empty());
  ASSERT_TRUE(p.assigned.has_value());
  EXPECT_EQ(*p.assigned, 1.0);
  EXPECT_TRUE(done.parent_indices(done.IndexOf("P")).empty());
  // The rest of the model is untouched.
  EXPECT_EQ(done.mechanism("F"), scm.mechanism("F"));
}

TEST(ScmIntervention, EmptyInterventionIsIdentity) {
  const Scm scm = Scm::Validate(SalarySpec());
  EXPECT_TRUE(ApplyIntervention(scm, Intervention()) == scm);
}

TEST(ScmIntervention, SeverOutgoingFreezesTheSource) {
  const Scm scm = Scm::Validate(MediationSpec());
  Intervention i;
  i.Add(SeverOutgoing{"X"});
  const Scm cut = ApplyIntervention(scm, i);
  EXPECT_TRUE(cut.mechanism("M").parents.empty());
  EXPECT_EQ(cut.mechanism("M").frozen, (std::vector<std::string>{"X"}));
  EXPECT_EQ(cut.mechanism("Y").parents, (std::vector<std::string>{"M"}));
  EXPECT_EQ(cut.mechanism("Y").frozen, (std::vector<std::string>{"X"}));
  EXPECT_FALSE(cut.HasEdge("X", "M"));
  EXPECT_TRUE(cut.HasEdge("M", "Y"));
}

TEST(ScmIntervention, SeverIncomingDropsParentsAndEquation) {
  const Scm scm = Scm::Validate(MediationSpec());
  Intervention i;
  i.Add(SeverIncoming{"Y"});
  const Scm cut = ApplyIntervention(scm, i);
  EXPECT_TRUE(cut.mechanism("Y").parents.empty());
  EXPECT_FALSE(cut.mechanism("Y").equation.has_value());
}

TEST(ScmIntervention, ConflictsAndUnknownTargets) {
  const Scm scm = Scm::Validate(SalarySpec());
  Intervention twice;
  twice.Add(SetConstant{"P", 1.0}).Add(SetConstant{"P", 2.0});
  EXPECT_THROW(ApplyIntervention(scm, twice), ValidationError);
  EXPECT_THROW(ApplyIntervention(scm, Intervention::Do("Q", 1.0)),
               ValidationError);
  Intervention cyclic;
  Mechanism back;
  back.parents = {"S"};
  back.equation = expr::Parse("S");
  cyclic.Add(ReplaceMechanism{"P", back});
  EXPECT_THROW(ApplyIntervention(scm, cyclic), ValidationError);
}

TEST(ScmIntervention, Describe) {
  Intervention i = Intervention::Do("X", 2.0);
  i.Add(SetConstant{"M", 0.0});
  EXPECT_EQ(i.Describe(), "do(X=2, M=0)");
  EXPECT_EQ(Intervention().Describe(), "none");
}

TEST(ScmCounterfactual, EmptyInterventionReproducesObserved) {
  const Scm scm = Scm::Validate(SalarySpec());
  const SampleResult r = Sample(scm, 100, 8);
  for (std::size_t i = 0; i < r.data.rows(); ++i) {
    const std::vector<double> out =
        Counterfactual(scm, r.data.row(i), r.noise.row(i), Intervention(), i);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out[c], r.data(i, c));
  }
}

TEST(ScmCounterfactual, MediationDoXZero) {
  const Scm scm = Scm::Validate(MediationSpec());
  const Dataset row = Row({"X", "M", "Y"}, {1.0, 1.5, 0.7});
  const NoiseDataset u = Abduct(scm, row);
  EXPECT_DOUBLE_EQ(u(0, 1), 1.0);
  const std::vector<double> out =
      Counterfactual(scm, row.row(0), u.row(0), Intervention::Do("X", 0.0));
  EXPECT_EQ(out[0], 0.0);
  EXPECT_DOUBLE_EQ(out[1], 1.0);
  // Y = M^2 - 0.5 X^2 + u_Y with u_Y = 0.7 - (1.5^2 - 0.5).
  EXPECT_NEAR(out[2], 1.0 + (0.7 - 1.75), 1e-12);
}

TEST(ScmCounterfactual, SalaryDoP) {
  const Scm scm = Scm::Validate(SalarySpec());
  const Dataset row = Row({"P", "F", "S"}, {1.0, 2.0, 1.5});
  const NoiseDataset u = Abduct(scm, row);
  const std::vector<double> out =
      Counterfactual(scm, row.row(0), u.row(0), Intervention::Do("P", 1.2));
  EXPECT_EQ(out[0], 1.2);
  EXPECT_NEAR(out[1], 3.456, 1e-12);
  EXPECT_NEAR(out[2], 3.456 - 1.44 + 0.5, 1e-12);
}

TEST(ScmCounterfactual, PerUnitAssignment) {
  const Scm scm = Scm::Validate(SalarySpec());
  const SampleResult r = Sample(scm, 4, 2);
  Intervention i;
  i.Add(SetPerUnit{"F", {1.0, 2.0, 3.0, 4.0}});
  const CounterfactualModel model(scm, i);
  std::vector<double> out(3);
  for (std::size_t unit = 0; unit < 4; ++unit) {
    model.Propagate(r.data.row(unit), r.noise.row(unit), unit, {}, out);
    EXPECT_EQ(out[1], unit + 1.0);
    EXPECT_EQ(out[0], r.data(unit, 0));
    EXPECT_NEAR(out[2], (unit + 1.0) - out[0] * out[0] + r.noise(unit, 2),
                1e-12);
  }
}

TEST(ScmProperty, ConsistencyOnRandomModels) {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const Scm scm = Scm::Validate(testing::MakeRandomEcmSpec(seed).scm);
    const SampleResult r = Sample(scm, 50, seed);
    const NoiseDataset u = Abduct(scm, r.data);
    for (std::size_t i = 0; i < r.data.rows(); ++i) {
      const std::vector<double> out =
          Counterfactual(scm, r.data.row(i), u.row(i), Intervention(), i);
      for (std::size_t c = 0; c < scm.size(); ++c) {
        ASSERT_NEAR(out[c], r.data(i, c), 1e-12);
      }
    }
  }
}

TEST(ScmProperty, SetConstantSurgery) {
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    const Scm scm = Scm::Validate(testing::MakeRandomEcmSpec(seed).scm);
    const std::string target = scm.variables()[seed % scm.size()];
    const Intervention i = Intervention::Do(target, 0.75);
    const Scm done = ApplyIntervention(scm, i);
    const std::size_t t = done.IndexOf(target);
    EXPECT_TRUE(done.parent_indices(t).empty());
    const SampleResult r = Sample(done, 30, seed);
    const SampleResult base = Sample(scm, 30, seed);
    for (std::size_t unit = 0; unit < 30; ++unit) {
      EXPECT_EQ(r.data(unit, t), 0.75);
      const std::vector<double> cf =
          Counterfactual(scm, base.data.row(unit), base.noise.row(unit), i,
                         unit);
      EXPECT_EQ(cf[t], 0.75);
    }
  }
}

TEST(Dataset, Invariants) {
  EXPECT_THROW(Dataset({"A", "A"}, Matrix(1, 2)), DataError);
  EXPECT_THROW(Dataset({"A"}, Matrix(1, 1, NAN)), DataError);
  EXPECT_THROW(Dataset({"A", "B"}, Matrix(1, 1)), DataError);
  const Dataset d({"A", "B"}, Matrix(2, 2, {1, 2, 3, 4}));
  EXPECT_EQ(d.Column("B"), (std::vector<double>{2, 4}));
  EXPECT_THROW(d.ColumnIndex("C"), DataError);
}

TEST(Dataset, CsvParsingAndLabels) {
  const Dataset d = ParseCsv("A,Class\n1.5,benign\n2,malignant\n",
                             {{"Class", {{"benign", 2}, {"malignant", 4}}}});
  EXPECT_EQ(d.Column("Class"), (std::vector<double>{2, 4}));
  EXPECT_EQ(d.Column("A"), (std::vector<double>{1.5, 2}));
  EXPECT_THROW(ParseCsv("A,Class\n1.5,benign\n"), DataError);
  EXPECT_THROW(ParseCsv("A,B\n1\n"), DataError);
  EXPECT_THROW(ParseCsv("A\nnan\n"), DataError);
  EXPECT_THROW(ParseCsv(""), DataError);
}

TEST(Dataset, CsvRoundTripIsExact) {
  const SampleResult r = Sample(Scm::Validate(SalarySpec()), 200, 17);
  EXPECT_EQ(ParseCsv(FormatCsv(r.data)), r.data);
  EXPECT_EQ(ParseDouble(FormatDouble(0.1)), 0.1);
  EXPECT_EQ(ParseDouble(FormatDouble17(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_FALSE(ParseDouble("1.0x").has_value());
  EXPECT_FALSE(ParseDouble("inf").has_value());
}

}  // namespace
}  // namespace cdp
