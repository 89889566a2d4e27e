// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string_view>
#include <vector>

#include "promptlab/model/transformer.hpp"
#include "promptlab/numcore/tensor.hpp"

namespace promptlab::tuner {

inline constexpr std::size_t kDefaultPromptLength = 20;
inline constexpr std::size_t kDefaultDeepLayers = 3;

enum class PromptMode { kSoft, kDeep };

std::string_view mode_name(PromptMode mode);
// "soft" or "deep"; throws ConfigError otherwise.
PromptMode parse_mode(std::string_view name);

// Trainable prompt vectors. SOFT holds only token_prompt; DEEP adds one
// [k x d] block per covered layer, always the last L layers of the model.
struct PromptParams {
  PromptMode mode = PromptMode::kSoft;
  nc::Var token_prompt;
  std::map<std::size_t, nc::Var> deep_prompts;
  bool truncate_token_prompt = false;

  std::size_t length() const;
  std::size_t width() const;
  // token_prompt first, then deep prompts in layer order.
  std::vector<nc::Var> parameters() const;
  // Independent copy of every value; the copy tracks gradients like the source.
  PromptParams clone() const;
  model::PromptInjection injection() const;
  bool operator==(const PromptParams& other) const;

  // Throws ConfigError on mode/layout violations against `config`.
  void validate(const model::ModelConfig& config) const;
};

// Zero-based indices of the last `count` blocks.
std::vector<std::size_t> covered_layers(std::size_t n_layers, std::size_t count);

// Wraps prior samples as trainable prompts without rescaling. For DEEP,
// deep_samples[i] goes to covered_layers(n_layers, deep_samples.size())[i].
PromptParams init_prompt(const nc::Tensor& samples, PromptMode mode,
                         const std::vector<nc::Tensor>& deep_samples = {},
                         std::size_t n_layers = 0);

model::ForwardResult soft_forward(nc::Tape& tape, const model::TransformerModel& model,
                                  const PromptParams& prompt, const model::TokenBatch& batch,
                                  model::ForwardOptions options = {});
model::ForwardResult deep_forward(nc::Tape& tape, const model::TransformerModel& model,
                                  const PromptParams& prompt, const model::TokenBatch& batch,
                                  model::ForwardOptions options = {});
// Dispatches on prompt.mode.
model::ForwardResult prompted_forward(nc::Tape& tape, const model::TransformerModel& model,
                                      const PromptParams& prompt, const model::TokenBatch& batch,
                                      model::ForwardOptions options = {});

}  // namespace promptlab::tuner
