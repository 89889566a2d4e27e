// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "promptlab/model/transformer.hpp"
#include "promptlab/tasks/dataset.hpp"

namespace promptlab::model {

struct PretrainConfig {
  std::size_t steps = 2000;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  std::size_t eval_every = 250;
  std::size_t max_val_examples = 256;
};

struct PretrainResult {
  std::vector<double> train_loss;                        // one per step
  std::vector<std::pair<std::size_t, double>> val_loss;  // (step, loss)
  double initial_val_loss = 0.0;
  double final_val_loss = 0.0;
};

// Next-token training on every position. Epoch order is a seeded shuffle.
// Throws ConfigError on a frozen model and NumericError if the loss
// diverges.
PretrainResult pretrain(TransformerModel& model, const tasks::Tokenizer& tokenizer,
                        const tasks::Dataset& train, const tasks::Dataset& val,
                        const PretrainConfig& config);

// Mean next-token loss over every position of `data`.
double lm_loss(const TransformerModel& model, const tasks::Tokenizer& tokenizer,
               const tasks::Dataset& data, std::size_t batch = 32);

}  // namespace promptlab::model
