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


#include <benchmark/benchmark.h>

#include <string>

#include "cdp/dataset.h"
#include "cdp/discovery.h"

namespace {

const cdp::Dataset& BreastCancer() {
  static const cdp::Dataset data = [] {
    cdp::LabelMap labels;
    labels["Class"]["benign"] = 2;
    labels["Class"]["malignant"] = 4;
    return cdp::ReadCsv(std::string(CDP_FIXTURE_DIR) + "/breast_cancer.csv",
                        labels);
  }();
  return data;
}

void BM_PcSkeleton(benchmark::State& state) {
  const int max_cond = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cdp::PcSkeleton(BreastCancer(), cdp::kDefaultAlpha, max_cond));
  }
}
BENCHMARK(BM_PcSkeleton)->Arg(0)->Arg(3);

void BM_PcOrientEnumerate(benchmark::State& state) {
  for (auto _ : state) {
    const cdp::SkeletonResult r = cdp::PcSkeleton(BreastCancer());
    const cdp::Cpdag cpdag = cdp::OrientCpdag(r.skeleton, r.sepsets);
    benchmark::DoNotOptimize(cdp::EnumerateDags(cpdag));
  }
}
BENCHMARK(BM_PcOrientEnumerate);

}  // namespace
