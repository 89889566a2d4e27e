// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/model/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "promptlab/error.hpp"
#include "promptlab/numcore/adam.hpp"
#include "promptlab/numcore/ops.hpp"
#include "promptlab/rng.hpp"

namespace promptlab::model {

namespace {

struct LmBatch {
  TokenBatch tokens;
  std::vector<std::int32_t> targets;
  std::vector<std::uint8_t> mask;
  std::size_t supervised = 0;
};

LmBatch make_lm_batch(std::span<const std::vector<tasks::TokenId>> seqs) {
  LmBatch b;
  b.tokens = TokenBatch::from_sequences(seqs);
  const std::size_t T = b.tokens.seq_len;
  b.targets.assign(b.tokens.batch * T, 0);
  b.mask.assign(b.tokens.batch * T, 0);
  for (std::size_t i = 0; i < b.tokens.batch; ++i)
    for (std::size_t t = 0; t + 1 < b.tokens.lengths[i]; ++t) {
      b.targets[i * T + t] = seqs[i][t + 1];
      b.mask[i * T + t] = 1;
      ++b.supervised;
    }
  return b;
}

std::vector<std::vector<tasks::TokenId>> encode_all(const tasks::Tokenizer& tok,
                                                   const tasks::Dataset& data) {
  std::vector<std::vector<tasks::TokenId>> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(tasks::encode_example(tok, ex).tokens);
  return out;
}

double loss_over(const TransformerModel& model, std::span<const std::vector<tasks::TokenId>> seqs,
                 std::size_t batch) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < seqs.size(); i += batch) {
    const auto chunk = seqs.subspan(i, std::min(batch, seqs.size() - i));
    auto b = make_lm_batch(chunk);
    if (b.supervised == 0) continue;
    nc::Tape tape;
    auto fr = forward(tape, model, b.tokens);
    auto loss = nc::cross_entropy(tape, fr.logits, b.targets, b.mask);
    total += loss->value[0] * static_cast<double>(b.supervised);
    count += b.supervised;
  }
  if (count == 0) throw ConfigError("no supervised positions in evaluation data");
  return total / static_cast<double>(count);
}

}  // namespace

double lm_loss(const TransformerModel& model, const tasks::Tokenizer& tokenizer,
               const tasks::Dataset& data, std::size_t batch) {
  const auto seqs = encode_all(tokenizer, data);
  return loss_over(model, seqs, batch);
}

PretrainResult pretrain(TransformerModel& model, const tasks::Tokenizer& tokenizer,
                        const tasks::Dataset& train, const tasks::Dataset& val,
                        const PretrainConfig& config) {
  if (model.frozen()) throw ConfigError("pretrain called on a frozen model");
  if (train.empty()) throw ConfigError("pretrain needs training data");
  if (config.batch == 0) throw ConfigError("pretrain batch must be positive");
  for (const auto& ex : train) {
    const auto n = tasks::encode_example(tokenizer, ex).tokens.size();
    if (n > model.config().max_seq)
      throw ConfigError("training sequence of " + std::to_string(n) + " tokens exceeds max_seq");
  }
  const auto train_seqs = encode_all(tokenizer, train);
  const auto val_all = encode_all(tokenizer, val);
  const std::span<const std::vector<tasks::TokenId>> val_seqs(
      val_all.data(), std::min(val_all.size(), config.max_val_examples));

  PretrainResult result;
  if (!val_seqs.empty()) result.initial_val_loss = result.final_val_loss = loss_over(model, val_seqs, 32);
  if (config.steps == 0) return result;

  nc::Adam adam(model.trainable_parameters(), nc::AdamConfig{.lr = config.lr});
  Rng rng(derive_seed(config.seed, "pretrain-order"));
  std::vector<std::size_t> order(train_seqs.size());
  std::size_t cursor = order.size();

  std::vector<std::vector<tasks::TokenId>> chunk;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    chunk.clear();
    while (chunk.size() < config.batch) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      chunk.push_back(train_seqs[order[cursor++]]);
    }
    auto b = make_lm_batch(chunk);
    nc::Tape tape;
    nc::Var loss;
    try {
      auto fr = forward(tape, model, b.tokens);
      loss = nc::cross_entropy(tape, fr.logits, b.targets, b.mask);
      tape.backward(loss);
      adam.step();
    } catch (const NumericError& e) {
      throw NumericError("pretraining diverged at step " + std::to_string(step) + ": " + e.what());
    }
    adam.zero_grad();
    result.train_loss.push_back(loss->value[0]);
    if (!val_seqs.empty() && (step % config.eval_every == 0 || step == config.steps)) {
      result.final_val_loss = loss_over(model, val_seqs, 32);
      result.val_loss.emplace_back(step, result.final_val_loss);
    }
  }
  return result;
}

}  // namespace promptlab::model
