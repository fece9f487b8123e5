# Copyright 2026 The CDP Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the synthetic breast-cancer-shaped fixture (ordinal 1-10 attributes)."""

import argparse

import numpy as np


def ordinal(x):
    return np.clip(np.rint(x), 1, 10).astype(int)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--output", default="fixtures/breast_cancer.csv")
    parser.add_argument("--n", type=int, default=683)
    parser.add_argument("--seed", type=int, default=2026)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.n
    clump = ordinal(rng.gamma(2.0, 2.2, n) + 1)
    adhesion = ordinal(rng.gamma(1.5, 2.0, n) + 1)
    size = ordinal(0.8 * adhesion + rng.normal(0.8, 1.6, n))
    shape = ordinal(0.85 * size + rng.normal(0.6, 1.3, n))
    nucleoli = ordinal(0.7 * size + rng.normal(0.7, 1.8, n))
    score = (0.5 * clump + 0.35 * size + 0.35 * shape + 0.25 * adhesion +
             0.3 * nucleoli - 7.5)
    malignant = rng.random(n) < 1.0 / (1.0 + np.exp(-score))

    with open(args.output, "w", encoding="utf-8") as out:
        out.write("Clump_Thickness,Cell_Size,Cell_Shape,Marginal_Adhesion,"
                  "Normal_Nucleoli,Class\n")
        for row in zip(clump, size, shape, adhesion, nucleoli, malignant):
            label = "malignant" if row[5] else "benign"
            out.write(",".join(str(v) for v in row[:5]) + "," + label + "\n")


if __name__ == "__main__":
    main()
