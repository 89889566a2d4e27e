// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "promptlab/numcore/tensor.hpp"

namespace promptlab::cli {

// One labelled series. Scatter series draw one <circle> per point; path
// series draw a single <polyline> through the points in order.
struct Series {
  std::string label;
  std::string group;  // legend entry; defaults to label
  nc::Tensor points;  // [n x 2]
  bool path = false;
  std::string color;  // empty picks from the palette by series index
};

struct PlotSpec {
  std::string title;
  std::string x_label = "PC1";
  std::string y_label = "PC2";
  bool legend = true;
};

// Self-contained SVG. The legend lists each distinct group once and uses
// squares, so the <circle> count equals the number of scatter points.
// Empty input yields axes only. Throws DimensionError for points that are
// not [n x 2].
std::string emit_scatter(const std::vector<Series>& series, const PlotSpec& spec);

// series,index,x,y rows for the same series.
std::string scatter_csv(const std::vector<Series>& series);

}  // namespace promptlab::cli
