// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "promptlab/analysis/metrics.hpp"
#include "promptlab/analysis/pca.hpp"

namespace promptlab::analysis {

// Shortest text that round-trips to the same double.
std::string format_number(double v);

// Minimal CSV writer: header first, then rows of preformatted fields.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> fields);
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

// index,nn_index,nn_distance,init_nn_distance,overlaps
CsvTable divergence_csv(const DivergenceReport& r);
nlohmann::ordered_json divergence_json(const DivergenceReport& r);

// sentence,steps,mean,std
CsvTable trajectory_csv(const TrajectoryReport& r);
nlohmann::ordered_json locality_json(const StepStats& corpus, const StepStats& baseline,
                                     const LocalityVerdict& v);

nlohmann::ordered_json cluster_json(const ClusterSeparation& c);

// component,explained_variance,explained_ratio
CsvTable pca_csv(const PcaModel& pca);

}  // namespace promptlab::analysis
