// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "promptlab/analysis/report.hpp"
#include "promptlab/error.hpp"

namespace promptlab::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

const std::string& name_of(const Series& s) { return s.group.empty() ? s.label : s.group; }

// Palette colour per distinct group, in order of first appearance.
std::vector<std::string> series_colors(const std::vector<Series>& series) {
  std::map<std::string, std::string> by_group;
  std::vector<std::string> out;
  for (const auto& s : series) {
    auto it = by_group.find(name_of(s));
    if (it == by_group.end())
      it = by_group.emplace(name_of(s), kPalette[by_group.size() % std::size(kPalette)]).first;
    out.push_back(s.color.empty() ? it->second : s.color);
  }
  return out;
}

}  // namespace

std::string emit_scatter(const std::vector<Series>& series, const PlotSpec& spec) {
  Range xr, yr;
  for (const auto& s : series) {
    if (s.points.rank() != 2 || s.points.cols() != 2)
      throw DimensionError("series '" + s.label + "' has shape " + nc::shape_str(s.points.shape()) +
                           ", expected [n x 2]");
    s.points.check_finite("series '" + s.label + "'");
    for (std::size_t r = 0; r < s.points.rows(); ++r) {
      xr.add(s.points.at(r, 0));
      yr.add(s.points.at(r, 1));
    }
  }
  xr.finish();
  yr.finish();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  const auto colors = series_colors(series);
  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\">\n";
  o += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">" +
       escape(spec.title) + "</text>\n";
  o += "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  o += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
       num(kTop + ph) + "\"/>\n";
  o += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
       num(kTop + ph) + "\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    o += "<line x1=\"" + num(px(fx)) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(px(fx)) + "\" y2=\"" +
         num(kTop + ph + 5) + "\"/>\n";
    o += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(py(fy)) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(py(fy)) + "\"/>\n";
  }
  o += "</g>\n<g class=\"ticks\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    o += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(kTop + ph + 18) + "\" text-anchor=\"middle\">" + tick(fx) +
         "</text>\n";
    o += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(fy) + 4) + "\" text-anchor=\"end\">" + tick(fy) +
         "</text>\n";
  }
  o += "</g>\n";
  o += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 18) +
       "\" font-size=\"12\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  o += "<text x=\"18\" y=\"" + num(kTop + ph / 2) + "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       num(kTop + ph / 2) + ")\">" + escape(spec.y_label) + "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    if (s.points.rows() == 0) continue;
    const auto& col = colors[i];
    if (s.path) {
      o += "<polyline class=\"series\" fill=\"none\" stroke=\"" + col + "\" stroke-width=\"1\" stroke-opacity=\"0.7\" points=\"";
      for (std::size_t r = 0; r < s.points.rows(); ++r) {
        if (r) o += ' ';
        o += num(px(s.points.at(r, 0))) + "," + num(py(s.points.at(r, 1)));
      }
      o += "\"/>\n";
    } else {
      o += "<g class=\"series\" fill=\"" + col + "\" fill-opacity=\"0.75\">\n";
      for (std::size_t r = 0; r < s.points.rows(); ++r)
        o += "<circle cx=\"" + num(px(s.points.at(r, 0))) + "\" cy=\"" + num(py(s.points.at(r, 1))) +
             "\" r=\"2.5\"/>\n";
      o += "</g>\n";
    }
  }

  if (spec.legend) {
    o += "<g class=\"legend\" font-size=\"11\">\n";
    std::set<std::string> shown;
    double y = kTop + 8;
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& s = series[i];
      const std::string& name = name_of(s);
      if (name.empty() || !shown.insert(name).second) continue;
      const auto& col = colors[i];
      const double x = kLeft + pw + 16;
      if (s.path)
        o += "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 10) + "\" y2=\"" + num(y) +
             "\" stroke=\"" + col + "\" stroke-width=\"2\"/>\n";
      else
        o += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 5) + "\" width=\"10\" height=\"10\" fill=\"" + col + "\"/>\n";
      o += "<text x=\"" + num(x + 16) + "\" y=\"" + num(y + 4) + "\">" + escape(name) + "</text>\n";
      y += 18;
    }
    o += "</g>\n";
  }
  o += "</svg>\n";
  return o;
}

std::string scatter_csv(const std::vector<Series>& series) {
  analysis::CsvTable t({"series", "index", "x", "y"});
  for (const auto& s : series) {
    if (s.points.rank() != 2 || s.points.cols() != 2)
      throw DimensionError("series '" + s.label + "' must be [n x 2]");
    for (std::size_t r = 0; r < s.points.rows(); ++r)
      t.add_row({s.label, std::to_string(r), analysis::format_number(s.points.at(r, 0)),
                 analysis::format_number(s.points.at(r, 1))});
  }
  return t.str();
}

}  // namespace promptlab::cli
