// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "promptlab/model/config.hpp"
#include "promptlab/tasks/dataset.hpp"

namespace promptlab::cli {

inline constexpr int kSchemaVersion = 1;

struct DataSection {
  std::size_t pretrain_examples = 20000;
  unsigned pretrain_val_permille = 100;
  std::size_t qa_examples = 2500;
  unsigned qa_val_permille = 200;
  std::size_t lm_sentences = 1000;
  std::size_t arith_examples = 1000;
  unsigned arith_digits = 3;
};

struct PretrainSection {
  std::size_t steps = 2000;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::size_t eval_every = 250;
  std::size_t max_val_examples = 256;
};

struct TuneSection {
  std::string mode = "soft";
  std::string prior = "isotropic";
  std::size_t prompt_length = 20;
  std::size_t deep_layers = 3;
  bool truncate = false;
  std::size_t steps = 1500;
  std::size_t batch = 16;
  std::size_t eval_every = 50;
  std::size_t patience = 200;
  double min_delta = 1e-3;
  std::size_t max_val_examples = 200;
  std::size_t replicate = 0;
};

// Activation source for a fitted Gaussian: "embedding" (character rows of
// the token-embedding table) or "<TASK>:<level>" with level 0 = embedded
// input and level l = output of block l.
struct ActivationSource {
  bool embedding = false;
  tasks::TaskId task = tasks::TaskId::kQa;
  std::size_t level = 0;
  std::string str() const;
};

ActivationSource parse_source(const std::string& text);

struct PriorSection {
  double sigma = 0.02;
  std::string fit_source = "QA:0";
  std::string interpolation_first = "LM:4";
  std::string interpolation_second = "ARITH:4";
  std::optional<double> alpha;
  double c = 5.0;
  std::string rule = "literal";
  std::size_t max_draws = 10'000'000;
  std::size_t fit_sequences = 500;
};

struct SweepSection {
  std::vector<std::string> priors{"isotropic", "fitted", "exclusion", "interpolation", "xavier"};
  std::vector<double> lrs{1e-4, 1e-3, 1e-2};
  std::vector<std::string> modes{"soft"};
};

struct AnalysisSection {
  std::size_t sequences = 500;
  std::optional<std::size_t> level;  // defaults to the last block
  std::size_t trajectory_sentences = 500;
  std::size_t walk_steps = 20000;
  // Token ids the random walk draws from: "corpus" (ids present in the
  // trajectory sentences) or "alphabet" (every character id).
  std::string walk_support = "corpus";
};

struct Config {
  std::uint64_t seed = 0;
  std::filesystem::path out = "run";
  double lr = 1e-3;
  model::ModelConfig model;
  DataSection data;
  PretrainSection pretrain;
  TuneSection tune;
  PriorSection prior;
  SweepSection sweep;
  AnalysisSection analysis;

  std::size_t analysis_level() const { return analysis.level.value_or(model.n_layers); }
  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Strict parse: schema_version must equal kSchemaVersion and unknown keys
// are errors. Missing keys keep their defaults.
Config parse_config(const nlohmann::json& j);
Config load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const Config& config);

}  // namespace promptlab::cli
