// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "promptlab/model/transformer.hpp"
#include "promptlab/tasks/dataset.hpp"
#include "promptlab/tuner/prompt.hpp"

namespace promptlab::tuner {

struct TuneConfig {
  double lr = 1e-3;
  std::size_t steps = 1500;
  std::size_t batch = 16;
  std::size_t eval_every = 50;
  // Stop once the best validation loss has not dropped by min_delta for
  // `patience` steps. patience = 0 disables early stopping.
  std::size_t patience = 200;
  double min_delta = 1e-3;
  std::uint64_t seed = 0;
  // 0 keeps the whole validation set.
  std::size_t max_val_examples = 0;

  void validate() const;
};

struct EvalMetrics {
  double loss = 0.0;            // mean over supervised positions
  double exact_match = 0.0;     // fraction of examples with every supervised token right
  double token_accuracy = 0.0;  // fraction of supervised positions right
  std::size_t examples = 0;
  std::size_t tokens = 0;
};

struct HistoryEntry {
  std::size_t step = 0;
  std::optional<double> train_loss;  // absent at step 0
  std::optional<double> val_loss;
};

struct TuneResult {
  PromptParams tuned;          // prompt at the best validation loss
  PromptParams init_snapshot;  // prompt before the first update
  std::vector<HistoryEntry> history;
  EvalMetrics final_metrics;   // tuned prompt on the validation set
  double best_val_loss = 0.0;
  std::size_t best_step = 0;
  std::size_t steps_run = 0;
  bool stopped_early = false;
};

// Answer-masked loss for QA/ARITH, full next-token loss for LM; prediction
// at a position is its argmax, which is what greedy decoding of the
// supervised span emits when earlier tokens are right. prompt may be null
// for the promptless baseline. Throws ConfigError on an empty dataset.
EvalMetrics evaluate(const model::TransformerModel& model, const PromptParams* prompt,
                     const tasks::Tokenizer& tokenizer, std::span<const tasks::Example> data,
                     std::size_t batch = 32);

// Adam on the prompt vectors only. Throws ConfigError when the model is not
// frozen. `prompt` itself is left untouched.
TuneResult tune(const model::TransformerModel& model, const PromptParams& prompt,
                const tasks::Tokenizer& tokenizer, std::span<const tasks::Example> train,
                std::span<const tasks::Example> val, const TuneConfig& config);

// First step whose validation loss is <= threshold.
std::optional<std::size_t> steps_to_threshold(std::span<const HistoryEntry> history,
                                              double threshold);

// Columns step,train_loss,val_loss; missing values are empty fields.
void write_history_csv(const std::filesystem::path& path, std::span<const HistoryEntry> history);

// Tensors "init.token", "init.deep.<l>", "tuned.token", "tuned.deep.<l>"
// plus "meta.prompt" = [mode, k, truncate, best_step, steps_run, best_val_loss].
void save_tune_result(const std::filesystem::path& path, const TuneResult& result);

struct SavedPrompts {
  PromptParams init;
  PromptParams tuned;
  std::size_t best_step = 0;
  std::size_t steps_run = 0;
  double best_val_loss = 0.0;
};
SavedPrompts load_tune_result(const std::filesystem::path& path);

}  // namespace promptlab::tuner
