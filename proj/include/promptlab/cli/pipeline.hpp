// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "promptlab/cli/config.hpp"

namespace promptlab::cli {

// Output layout under Config::out:
//   config.json                  resolved configuration
//   data/*.tsv                   gen-data
//   base.ppl, pretrain.csv/json  pretrain
//   priors/<prior>-<mode>.ppl    sample-prior (suffix -r<N> for replicate N)
//   cells/<cell>/                tune and sweep
//   sweep/summary.csv            sweep
//   analysis/                    analyze
//   figures/<recipe>.svg|csv     figures
namespace layout {
std::filesystem::path data(const Config& c, const std::string& name);
std::filesystem::path base(const Config& c);
std::filesystem::path prior(const Config& c, const std::string& prior, const std::string& mode);
std::filesystem::path cell(const Config& c, const std::string& name);
}  // namespace layout

// Seeds all derive from Config::seed and a stage tag.
std::uint64_t stage_seed(const Config& c, const std::string& tag, std::uint64_t index = 0);

void run_gen_data(const Config& c);
void run_pretrain(const Config& c);
void run_sample_prior(const Config& c, const std::vector<std::string>& priors,
                      const std::vector<std::string>& modes);

struct CellSpec {
  std::string prior;
  double lr = 0.0;
  std::string mode;
  std::size_t replicate = 0;
  // <prior>-lr<lr>-<mode>, plus -r<N> for replicate N > 0.
  std::string name() const;
};

std::vector<CellSpec> sweep_cells(const Config& c);

struct SweepOutcome {
  std::size_t completed = 0;  // freshly tuned
  std::size_t reused = 0;     // already complete on disk
  std::size_t failed = 0;
  std::uint64_t checksum_before = 0;
  std::uint64_t checksum_after = 0;
};

// Tunes every cell not already complete, `jobs` at a time. A cell that
// throws is recorded in failures.csv and leaves empty summary fields.
SweepOutcome run_cells(const Config& c, const std::vector<CellSpec>& cells, std::size_t jobs,
                       bool write_summary);

void run_analyze(const Config& c);

std::vector<std::string> figure_recipes();
void run_figures(const Config& c, const std::vector<std::string>& recipes);

// CSV column documentation for --help.
std::string csv_schemas();

}  // namespace promptlab::cli
