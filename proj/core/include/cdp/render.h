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


// SVG figures and CSV export for curve and band sets. Output is a pure
// function of the input: identical inputs give byte-identical text.

#ifndef CDP_RENDER_H_
#define CDP_RENDER_H_

#include <string>
#include <string_view>
#include <vector>

#include "cdp/engine.h"

namespace cdp {

struct PlotStyle {
  int width = 640;
  int height = 480;
  int margin = 50;
  double curve_width = 1.0;
  double curve_opacity = 0.25;
  double mean_width = 3.0;
  std::string ice_color = "#d62728";
  std::string tdp_color = "#1f77b4";
  std::string pcdp_color = "#9467bd";
  std::string nddp_color = "#2ca02c";
  std::string nidp_color = "#ff7f0e";
  // Empty labels fall back to the grid variable / "prediction" / a title
  // built from the plot kind.
  std::string x_label;
  std::string y_label;
  std::string title;
  bool grid_lines = false;

  // ValidationError unless sizes are positive, the plot area is nonempty and
  // opacity is in (0, 1].
  void Validate() const;
  const std::string& ColorFor(PlotKind kind) const;
};

// A linear axis with exactly five round ticks covering [lo, hi].
struct Axis {
  double min = 0.0;
  double max = 1.0;
  double step = 0.25;
  int decimals = 2;

  std::vector<double> Ticks() const;
};

// Pads [lo, hi] by 5% of its width (a degenerate range by 5% of |lo|, or 1)
// and widens it to the enclosing 5-tick grid with step 1, 2 or 5 x 10^k. At
// each step size the unpadded range is tried before a coarser step.
Axis MakeAxis(double lo, double hi);

std::string RenderCurves(const CurveSet& curves, const PlotStyle& style = {});
std::string RenderBand(const BandSet& band, const PlotStyle& style = {});

// Panels laid out row by row; every row has the same number of columns.
// Row labels (may be empty) are printed left of each row.
std::string RenderCurveGrid(const std::vector<std::vector<CurveSet>>& rows,
                            const std::vector<std::string>& row_labels,
                            const PlotStyle& style = {});

// Header "plot_kind,unit,grid_value,value"; unit rows ascending, then the
// mean rows; grid values ascending within each; 17 significant digits.
std::string ExportCsv(const CurveSet& curves);
// Inverse of ExportCsv (metadata and the grid variable name are not stored).
// ParseError with the line number on malformed input.
CurveSet ParseCurveCsv(std::string_view text);

// Same schema; unit is the model index and there are no mean rows.
std::string ExportBandCsv(const BandSet& band);

}  // namespace cdp

#endif  // CDP_RENDER_H_
