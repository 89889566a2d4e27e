// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/analysis/report.hpp"

#include <charconv>
#include <fstream>

#include "promptlab/error.hpp"

namespace promptlab::analysis {

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> fields) {
  if (fields.size() != header_.size())
    throw DimensionError("csv row has " + std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(header_.size()));
  rows_.push_back(std::move(fields));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& f) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) out += ',';
      out += f[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str()); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("failed writing " + path.string());
}

CsvTable divergence_csv(const DivergenceReport& r) {
  CsvTable t({"index", "nn_index", "nn_distance", "init_nn_distance", "overlaps"});
  for (const auto& p : r.points)
    t.add_row({std::to_string(p.index), std::to_string(p.nn_index), format_number(p.nn_distance),
               format_number(p.init_nn_distance), p.overlaps ? "1" : "0"});
  return t;
}

nlohmann::ordered_json divergence_json(const DivergenceReport& r) {
  nlohmann::ordered_json j;
  j["mean_nn_distance"] = r.mean_nn_distance;
  j["init_nn_distance"] = r.init_nn_distance;
  j["overlap_fraction"] = r.overlap_fraction;
  j["overlap_radius"] = r.overlap_radius;
  j["overlap_definition"] =
      "share of tuned vectors whose nearest reference vector lies within the median "
      "nearest-other distance of the reference set (project-defined collapse measure)";
  j["points"] = r.points.size();
  return j;
}

CsvTable trajectory_csv(const TrajectoryReport& r) {
  CsvTable t({"sentence", "steps", "mean", "std"});
  for (std::size_t i = 0; i < r.sentences.size(); ++i) {
    const auto& s = r.sentences[i];
    t.add_row({std::to_string(i), std::to_string(s.steps), format_number(s.mean),
               format_number(s.std)});
  }
  return t;
}

nlohmann::ordered_json locality_json(const StepStats& corpus, const StepStats& baseline,
                                     const LocalityVerdict& v) {
  nlohmann::ordered_json j;
  j["corpus_steps"] = corpus.steps;
  j["corpus_mean"] = corpus.mean;
  j["corpus_std"] = corpus.std;
  j["baseline_steps"] = baseline.steps;
  j["baseline_mean"] = baseline.mean;
  j["baseline_std"] = baseline.std;
  j["z"] = v.z;
  j["verdict"] = v.lower ? "lower" : "not-lower";
  return j;
}

nlohmann::ordered_json cluster_json(const ClusterSeparation& c) {
  nlohmann::ordered_json j;
  j["centroid_distance"] = c.centroid_distance;
  j["mean_intra_spread"] = c.mean_intra_spread;
  j["separation_ratio"] = c.separation_ratio;
  j["silhouette"] = c.silhouette;
  j["n_a"] = c.n_a;
  j["n_b"] = c.n_b;
  return j;
}

CsvTable pca_csv(const PcaModel& pca) {
  CsvTable t({"component", "explained_variance", "explained_ratio"});
  for (std::size_t i = 0; i < pca.n_components(); ++i) {
    const double ev = pca.explained_variance[i];
    t.add_row({std::to_string(i), format_number(ev),
               format_number(pca.total_variance > 0.0 ? ev / pca.total_variance : 0.0)});
  }
  return t;
}

}  // namespace promptlab::analysis
