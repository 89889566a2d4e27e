// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "promptlab/model/config.hpp"
#include "promptlab/numcore/autograd.hpp"
#include "promptlab/tasks/tokenizer.hpp"

namespace promptlab::model {

struct LayerParams {
  nc::Var ln1_gain, ln1_bias;
  nc::Var wq, wk, wv, wo;
  nc::Var ln2_gain, ln2_bias;
  nc::Var w_up, w_down;
};

// Pre-norm decoder-only transformer with learned positions and bias-free
// projections. Parameters are only reachable read-only once frozen.
class TransformerModel {
 public:
  explicit TransformerModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  const nc::Var& embedding() const { return embedding_; }
  const nc::Var& positional() const { return positional_; }
  std::span<const LayerParams> layers() const { return layers_; }
  const nc::Var& final_gain() const { return final_gain_; }
  const nc::Var& final_bias() const { return final_bias_; }
  const nc::Var& unembedding() const { return unembedding_; }

  // Stable name -> parameter listing, in checkpoint order.
  std::vector<std::pair<std::string, nc::Var>> named_parameters() const;

  // Parameters for an optimizer. Throws ConfigError when frozen.
  std::vector<nc::Var> trainable_parameters() const;

  // Clears requires_grad on every parameter and drops stale gradients.
  void freeze();
  void unfreeze();
  bool frozen() const { return frozen_; }

  // FNV-1a over every parameter value in named_parameters() order.
  std::uint64_t checksum() const;

 private:
  ModelConfig config_;
  nc::Var embedding_;
  nc::Var positional_;
  std::vector<LayerParams> layers_;
  nc::Var final_gain_, final_bias_;
  nc::Var unembedding_;
  bool frozen_ = false;
};

// Parameters from N(0, 0.02); norm gains 1 and biases 0. Deterministic in
// config.seed.
TransformerModel build_model(const ModelConfig& config);

// Right-padded token matrix.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<tasks::TokenId> ids;
  std::vector<std::size_t> lengths;

  static TokenBatch from_sequences(std::span<const std::vector<tasks::TokenId>> sequences,
                                   std::size_t pad_to = 0);
};

// Trainable vectors spliced into the forward pass.
//   token_prompt   [k x d] prepended to the embedded input (positions 0..k-1)
//   layer_prompts  block index -> [k_l x d] prepended to that block's input;
//                  the first k_l rows of the block output are discarded
struct PromptInjection {
  nc::Var token_prompt;
  std::map<std::size_t, nc::Var> layer_prompts;
  // Drop the token-prompt rows after the first block.
  bool truncate_token_prompt = false;

  std::size_t token_length() const;
};

// Rows per sequence seen by block `layer` (0-based).
struct LayerWidth {
  std::size_t layer = 0;
  std::size_t input = 0;
  std::size_t internal = 0;
  std::size_t emitted = 0;
};

struct ForwardOptions {
  const PromptInjection* prompt = nullptr;
  // Activation levels to capture: 0 = embedded input, l = output of block l.
  std::vector<std::size_t> capture_layers;
  bool capture_prompt_positions = false;
  std::function<void(const LayerWidth&)> on_layer;
};

struct ForwardResult {
  nc::Var logits;                 // [batch * positions, vocab]
  std::size_t batch = 0;
  std::size_t positions = 0;      // rows per sequence in logits
  std::size_t prefix = 0;         // leading prompt rows per sequence in logits
  // level -> [batch * rows, d]; rows per sequence are seq_len, or
  // (prompt rows + seq_len) with capture_prompt_positions.
  std::map<std::size_t, nc::Tensor> captured;
};

// Causal forward pass. Throws DimensionError when the prompted input or the
// input of any prompted block exceeds config.max_seq.
ForwardResult forward(nc::Tape& tape, const TransformerModel& model, const TokenBatch& batch,
                      const ForwardOptions& options = {});

}  // namespace promptlab::model
