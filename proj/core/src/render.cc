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


#include "cdp/render.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cdp/error.h"

namespace cdp {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                    "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f"};

std::string Fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  // No "-0.00".
  if (s.front() == '-' &&
      s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

std::string F2(double v) { return Fixed(v, 2); }

std::string Escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string Upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

class Frame {
 public:
  Frame(const PlotStyle& style, Axis x, Axis y) : style_(style), x_(x), y_(y) {}

  double X(double v) const {
    const double w = style_.width - 2.0 * style_.margin;
    return style_.margin + (v - x_.min) / (x_.max - x_.min) * w;
  }
  double Y(double v) const {
    const double h = style_.height - 2.0 * style_.margin;
    return style_.height - style_.margin - (v - y_.min) / (y_.max - y_.min) * h;
  }

  std::string Points(const std::vector<double>& xs,
                     const std::vector<double>& ys) const {
    std::string out;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (k > 0) out += ' ';
      out += F2(X(xs[k])) + "," + F2(Y(ys[k]));
    }
    return out;
  }

  void Axes(std::string& out, std::string_view x_label,
            std::string_view y_label, std::string_view title) const {
    const double left = style_.margin;
    const double right = style_.width - style_.margin;
    const double top = style_.margin;
    const double bottom = style_.height - style_.margin;
    out += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(style_.width) +
           "\" height=\"" + std::to_string(style_.height) +
           "\" fill=\"white\"/>\n";
    out += "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    out += "<line x1=\"" + F2(left) + "\" y1=\"" + F2(bottom) + "\" x2=\"" +
           F2(right) + "\" y2=\"" + F2(bottom) + "\"/>\n";
    out += "<line x1=\"" + F2(left) + "\" y1=\"" + F2(top) + "\" x2=\"" +
           F2(left) + "\" y2=\"" + F2(bottom) + "\"/>\n";
    for (double t : x_.Ticks()) {
      const std::string px = F2(X(t));
      out += "<line x1=\"" + px + "\" y1=\"" + F2(bottom) + "\" x2=\"" + px +
             "\" y2=\"" + F2(bottom + 5) + "\"/>\n";
      if (style_.grid_lines) {
        out += "<line x1=\"" + px + "\" y1=\"" + F2(top) + "\" x2=\"" + px +
               "\" y2=\"" + F2(bottom) + "\" stroke=\"#dddddd\"/>\n";
      }
    }
    for (double t : y_.Ticks()) {
      const std::string py = F2(Y(t));
      out += "<line x1=\"" + F2(left - 5) + "\" y1=\"" + py + "\" x2=\"" +
             F2(left) + "\" y2=\"" + py + "\"/>\n";
      if (style_.grid_lines) {
        out += "<line x1=\"" + F2(left) + "\" y1=\"" + py + "\" x2=\"" +
               F2(right) + "\" y2=\"" + py + "\" stroke=\"#dddddd\"/>\n";
      }
    }
    out += "</g>\n";
    out += "<g class=\"tick-labels\" font-size=\"10\" fill=\"black\">\n";
    for (double t : x_.Ticks()) {
      out += "<text x=\"" + F2(X(t)) + "\" y=\"" + F2(bottom + 16) +
             "\" text-anchor=\"middle\">" + Fixed(t, x_.decimals) +
             "</text>\n";
    }
    for (double t : y_.Ticks()) {
      out += "<text x=\"" + F2(left - 8) + "\" y=\"" + F2(Y(t) + 3) +
             "\" text-anchor=\"end\">" + Fixed(t, y_.decimals) + "</text>\n";
    }
    out += "</g>\n";
    out += "<text x=\"" + F2(style_.width / 2.0) + "\" y=\"" +
           F2(style_.height - 12.0) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + Escape(x_label) +
           "</text>\n";
    out += "<text x=\"14\" y=\"" + F2(style_.height / 2.0) +
           "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 "
           "14 " +
           F2(style_.height / 2.0) + ")\">" + Escape(y_label) + "</text>\n";
    out += "<text x=\"" + F2(style_.width / 2.0) + "\" y=\"" +
           F2(style_.margin / 2.0) +
           "\" font-size=\"14\" text-anchor=\"middle\">" + Escape(title) +
           "</text>\n";
  }

 private:
  const PlotStyle& style_;
  Axis x_;
  Axis y_;
};

std::string Open(int width, int height) {
  const std::string w = std::to_string(width);
  const std::string h = std::to_string(height);
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         w + "\" height=\"" + h + "\" viewBox=\"0 0 " + w + " " + h + "\">\n";
}

std::pair<double, double> Extent(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

std::string CurvesBody(const CurveSet& curves, const PlotStyle& style) {
  const auto& xs = curves.grid.values;
  double ylo = std::numeric_limits<double>::infinity();
  double yhi = -ylo;
  for (double v : curves.values.data()) {
    ylo = std::min(ylo, v);
    yhi = std::max(yhi, v);
  }
  for (double v : curves.mean) {
    ylo = std::min(ylo, v);
    yhi = std::max(yhi, v);
  }
  const auto [xlo, xhi] = Extent(xs);
  const Frame frame(style, MakeAxis(xlo, xhi), MakeAxis(ylo, yhi));
  const std::string kind = Upper(PlotKindName(curves.kind));
  const std::string x_label =
      style.x_label.empty() ? curves.grid.variable : style.x_label;
  const std::string y_label =
      style.y_label.empty() ? std::string("prediction") : style.y_label;
  std::string title = style.title;
  if (title.empty()) {
    title = kind;
    if (!curves.grid.variable.empty()) title += " of " + curves.grid.variable;
  }
  std::string out;
  frame.Axes(out, x_label, y_label, title);
  const std::string& color = style.ColorFor(curves.kind);
  out += "<g class=\"units\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"" + F2(style.curve_width) +
         "\" stroke-opacity=\"" + F2(style.curve_opacity) + "\">\n";
  for (std::size_t i = 0; i < curves.units(); ++i) {
    out += "<polyline points=\"" + frame.Points(xs, curves.Curve(i)) +
           "\"/>\n";
  }
  out += "</g>\n";
  out += "<polyline class=\"mean\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"" + F2(style.mean_width) + "\" points=\"" +
         frame.Points(xs, curves.mean) + "\"/>\n";
  return out;
}

}  // namespace

void PlotStyle::Validate() const {
  if (width <= 0 || height <= 0) {
    throw ValidationError("plot width and height must be positive");
  }
  if (margin < 0 || 2 * margin >= width || 2 * margin >= height) {
    throw ValidationError("plot margins leave no drawing area");
  }
  if (!(curve_opacity > 0.0 && curve_opacity <= 1.0)) {
    throw ValidationError("curve opacity must be in (0, 1]");
  }
  if (!(curve_width > 0.0) || !(mean_width > 0.0)) {
    throw ValidationError("stroke widths must be positive");
  }
}

const std::string& PlotStyle::ColorFor(PlotKind kind) const {
  switch (kind) {
    case PlotKind::kIce:
      return ice_color;
    case PlotKind::kTdp:
      return tdp_color;
    case PlotKind::kPcdp:
      return pcdp_color;
    case PlotKind::kNddp:
      return nddp_color;
    case PlotKind::kNidp:
      return nidp_color;
  }
  return ice_color;
}

std::vector<double> Axis::Ticks() const {
  std::vector<double> ticks(5);
  for (int k = 0; k < 5; ++k) ticks[static_cast<std::size_t>(k)] = min + k * step;
  ticks.back() = max;
  return ticks;
}

Axis MakeAxis(double lo, double hi) {
  if (hi < lo) std::swap(lo, hi);
  const double span = hi - lo;
  const double pad =
      span > 0.0 ? 0.05 * span : (lo != 0.0 ? 0.05 * std::abs(lo) : 1.0);
  const double a = lo - pad;
  const double b = hi + pad;
  int e = static_cast<int>(std::floor(std::log10((b - a) / 4.0))) - 1;
  for (;; ++e) {
    for (int m : {1, 2, 5}) {
      const double step = m * std::pow(10.0, e);
      // The padded range first; the bare extent before a coarser step.
      for (auto [from, to] : {std::pair{a, b}, std::pair{lo, hi}}) {
        const double k0 = std::floor(from / step);
        if ((k0 + 4.0) * step >= to) {
          Axis axis;
          axis.step = step;
          axis.min = k0 * step;
          axis.max = (k0 + 4.0) * step;
          axis.decimals = std::max(0, -e);
          return axis;
        }
      }
    }
  }
}

std::string RenderCurves(const CurveSet& curves, const PlotStyle& style) {
  style.Validate();
  curves.Validate();
  return Open(style.width, style.height) + CurvesBody(curves, style) +
         "</svg>\n";
}

std::string RenderBand(const BandSet& band, const PlotStyle& style) {
  style.Validate();
  band.Validate();
  const auto& xs = band.grid.values;
  const auto [xlo, xhi] = Extent(xs);
  const double ylo = *std::min_element(band.lower.begin(), band.lower.end());
  const double yhi = *std::max_element(band.upper.begin(), band.upper.end());
  const Frame frame(style, MakeAxis(xlo, xhi), MakeAxis(ylo, yhi));
  std::string title = style.title;
  if (title.empty()) {
    title = Upper(PlotKindName(band.kind)) + " band";
    if (!band.grid.variable.empty()) title += " of " + band.grid.variable;
  }
  std::string out = Open(style.width, style.height);
  frame.Axes(out, style.x_label.empty() ? band.grid.variable : style.x_label,
             style.y_label.empty() ? "prediction" : style.y_label, title);

  std::vector<double> px = xs;
  std::vector<double> py = band.lower;
  px.insert(px.end(), xs.rbegin(), xs.rend());
  py.insert(py.end(), band.upper.rbegin(), band.upper.rend());
  out += "<polygon class=\"band\" fill=\"" + style.ColorFor(band.kind) +
         "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"" +
         frame.Points(px, py) + "\"/>\n";
  for (std::size_t k = 0; k < band.models(); ++k) {
    const auto row = band.curves.row(k);
    out += "<polyline class=\"model\" fill=\"none\" stroke=\"" +
           std::string(kPalette[k % std::size(kPalette)]) +
           "\" stroke-width=\"" + F2(style.mean_width) + "\" points=\"" +
           frame.Points(xs, std::vector<double>(row.begin(), row.end())) +
           "\"/>\n";
  }
  out += "<g class=\"legend\" font-size=\"11\">\n";
  for (std::size_t k = 0; k < band.models(); ++k) {
    const double y = style.margin + 12.0 + 16.0 * static_cast<double>(k);
    const double x = style.width - style.margin - 150.0;
    out += "<line x1=\"" + F2(x) + "\" y1=\"" + F2(y) + "\" x2=\"" +
           F2(x + 20) + "\" y2=\"" + F2(y) + "\" stroke=\"" +
           kPalette[k % std::size(kPalette)] + "\" stroke-width=\"3\"/>\n";
    out += "<text x=\"" + F2(x + 26) + "\" y=\"" + F2(y + 4) + "\">" +
           Escape(band.labels[k]) + "</text>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

std::string RenderCurveGrid(const std::vector<std::vector<CurveSet>>& rows,
                            const std::vector<std::string>& row_labels,
                            const PlotStyle& style) {
  style.Validate();
  if (rows.empty() || rows.front().empty()) {
    throw ValidationError("figure grid is empty");
  }
  const std::size_t cols = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != cols) {
      throw ValidationError("figure grid rows differ in length");
    }
  }
  constexpr int kLabelWidth = 30;
  const int width = kLabelWidth + static_cast<int>(cols) * style.width;
  const int height = static_cast<int>(rows.size()) * style.height;
  std::string out = Open(width, height);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y0 = static_cast<double>(r) * style.height;
    if (r < row_labels.size() && !row_labels[r].empty()) {
      const double cy = y0 + style.height / 2.0;
      out += "<text x=\"18\" y=\"" + F2(cy) +
             "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 "
             "18 " +
             F2(cy) + ")\">" + Escape(row_labels[r]) + "</text>\n";
    }
    for (std::size_t c = 0; c < cols; ++c) {
      rows[r][c].Validate();
      const double x0 = kLabelWidth + static_cast<double>(c) * style.width;
      out += "<g transform=\"translate(" + F2(x0) + "," + F2(y0) + ")\">\n" +
             CurvesBody(rows[r][c], style) + "</g>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

std::string ExportCsv(const CurveSet& curves) {
  const std::string kind(PlotKindName(curves.kind));
  std::string out = "plot_kind,unit,grid_value,value\n";
  for (std::size_t i = 0; i < curves.units(); ++i) {
    const std::string prefix = kind + "," + std::to_string(i) + ",";
    for (std::size_t g = 0; g < curves.grid.size(); ++g) {
      out += prefix + FormatDouble17(curves.grid.values[g]) + "," +
             FormatDouble17(curves.at(i, g)) + "\n";
    }
  }
  for (std::size_t g = 0; g < curves.grid.size(); ++g) {
    out += kind + ",mean," + FormatDouble17(curves.grid.values[g]) + "," +
           FormatDouble17(curves.mean[g]) + "\n";
  }
  return out;
}

CurveSet ParseCurveCsv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0] != "plot_kind,unit,grid_value,value") {
    throw ParseError("expected header 'plot_kind,unit,grid_value,value'", 0, 1);
  }
  CurveSet out;
  std::vector<std::vector<double>> unit_values;
  std::vector<double> grid;
  bool have_kind = false;
  bool in_mean = false;
  std::size_t mean_count = 0;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    std::vector<std::string_view> cells;
    std::string_view rest = lines[n];
    for (std::size_t comma; (comma = rest.find(',')) != std::string_view::npos;) {
      cells.push_back(rest.substr(0, comma));
      rest.remove_prefix(comma + 1);
    }
    cells.push_back(rest);
    if (cells.size() != 4) throw ParseError("expected 4 fields", 0, line_no);
    PlotKind kind;
    try {
      kind = PlotKindFromName(cells[0]);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), 0, line_no);
    }
    if (!have_kind) {
      out.kind = kind;
      have_kind = true;
    } else if (kind != out.kind) {
      throw ParseError("mixed plot kinds", 0, line_no);
    }
    const auto x = ParseDouble(cells[2]);
    const auto v = ParseDouble(cells[3]);
    if (!x || !v) throw ParseError("malformed number", 0, line_no);
    std::vector<double>* target;
    std::size_t position;
    if (cells[1] == "mean") {
      in_mean = true;
      position = mean_count++;
      target = &out.mean;
    } else {
      if (in_mean) throw ParseError("unit row after mean rows", 0, line_no);
      const auto unit = ParseDouble(cells[1]);
      if (!unit || *unit != std::floor(*unit) || *unit < 0) {
        throw ParseError("unit must be an integer or 'mean'", 0, line_no);
      }
      const auto u = static_cast<std::size_t>(*unit);
      if (u == unit_values.size()) {
        unit_values.emplace_back();
      } else if (u + 1 != unit_values.size()) {
        throw ParseError("units out of order", 0, line_no);
      }
      target = &unit_values.back();
      position = target->size();
    }
    const bool defines_grid = in_mean ? unit_values.empty()
                                      : unit_values.size() == 1;
    if (defines_grid) {
      if (!grid.empty() && !(grid.back() < *x)) {
        throw ParseError("grid values not increasing", 0, line_no);
      }
      grid.push_back(*x);
    } else if (position >= grid.size() || grid[position] != *x) {
      throw ParseError("grid value differs from the first unit's grid", 0,
                       line_no);
    }
    target->push_back(*v);
  }
  if (out.mean.size() != grid.size() || grid.empty()) {
    throw ParseError("mean rows do not cover the grid", 0, lines.size());
  }
  out.grid.values = grid;
  out.values = Matrix(unit_values.size(), grid.size());
  for (std::size_t i = 0; i < unit_values.size(); ++i) {
    if (unit_values[i].size() != grid.size()) {
      throw ParseError("unit " + std::to_string(i) + " does not cover the grid",
                       0, lines.size());
    }
    std::copy(unit_values[i].begin(), unit_values[i].end(),
              out.values.row(i).begin());
  }
  return out;
}

std::string ExportBandCsv(const BandSet& band) {
  const std::string kind(PlotKindName(band.kind));
  std::string out = "plot_kind,unit,grid_value,value\n";
  for (std::size_t k = 0; k < band.models(); ++k) {
    for (std::size_t g = 0; g < band.grid.size(); ++g) {
      out += kind + "," + std::to_string(k) + "," +
             FormatDouble17(band.grid.values[g]) + "," +
             FormatDouble17(band.curves(k, g)) + "\n";
    }
  }
  return out;
}

}  // namespace cdp
