// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/tuner/prompt.hpp"

#include <string>

#include "promptlab/error.hpp"

namespace promptlab::tuner {

std::string_view mode_name(PromptMode mode) {
  return mode == PromptMode::kSoft ? "soft" : "deep";
}

PromptMode parse_mode(std::string_view name) {
  if (name == "soft") return PromptMode::kSoft;
  if (name == "deep") return PromptMode::kDeep;
  throw ConfigError("unknown prompt mode '" + std::string(name) + "' (expected soft or deep)");
}

std::size_t PromptParams::length() const { return token_prompt ? token_prompt->value.rows() : 0; }

std::size_t PromptParams::width() const { return token_prompt ? token_prompt->value.cols() : 0; }

std::vector<nc::Var> PromptParams::parameters() const {
  std::vector<nc::Var> out;
  if (token_prompt) out.push_back(token_prompt);
  for (const auto& [layer, p] : deep_prompts) out.push_back(p);
  return out;
}

PromptParams PromptParams::clone() const {
  PromptParams copy;
  copy.mode = mode;
  copy.truncate_token_prompt = truncate_token_prompt;
  if (token_prompt) copy.token_prompt = nc::make_var(token_prompt->value, token_prompt->requires_grad);
  for (const auto& [layer, p] : deep_prompts)
    copy.deep_prompts[layer] = nc::make_var(p->value, p->requires_grad);
  return copy;
}

model::PromptInjection PromptParams::injection() const {
  model::PromptInjection inj;
  inj.token_prompt = token_prompt;
  inj.layer_prompts = deep_prompts;
  inj.truncate_token_prompt = truncate_token_prompt;
  return inj;
}

bool PromptParams::operator==(const PromptParams& other) const {
  if (mode != other.mode || truncate_token_prompt != other.truncate_token_prompt) return false;
  if (bool(token_prompt) != bool(other.token_prompt)) return false;
  if (token_prompt && token_prompt->value != other.token_prompt->value) return false;
  if (deep_prompts.size() != other.deep_prompts.size()) return false;
  for (const auto& [layer, p] : deep_prompts) {
    auto it = other.deep_prompts.find(layer);
    if (it == other.deep_prompts.end() || p->value != it->second->value) return false;
  }
  return true;
}

void PromptParams::validate(const model::ModelConfig& config) const {
  if (token_prompt && token_prompt->value.cols() != config.d_model)
    throw ConfigError("token prompt width " + std::to_string(token_prompt->value.cols()) +
                      " != d_model " + std::to_string(config.d_model));
  if (mode == PromptMode::kSoft) {
    if (!deep_prompts.empty()) throw ConfigError("soft prompt must not carry deep prompts");
    return;
  }
  const auto expected = covered_layers(config.n_layers, deep_prompts.size());
  std::size_t i = 0;
  for (const auto& [layer, p] : deep_prompts) {
    if (layer != expected[i++])
      throw ConfigError("deep prompts must cover the last layers contiguously; found block " +
                        std::to_string(layer));
    if (p->value.rank() != 2 || p->value.cols() != config.d_model)
      throw ConfigError("deep prompt for block " + std::to_string(layer) + " must be [k x " +
                        std::to_string(config.d_model) + "]");
  }
}

std::vector<std::size_t> covered_layers(std::size_t n_layers, std::size_t count) {
  if (count > n_layers)
    throw ConfigError("cannot cover " + std::to_string(count) + " layers of a " +
                      std::to_string(n_layers) + "-layer model");
  std::vector<std::size_t> out;
  for (std::size_t l = n_layers - count; l < n_layers; ++l) out.push_back(l);
  return out;
}

PromptParams init_prompt(const nc::Tensor& samples, PromptMode mode,
                         const std::vector<nc::Tensor>& deep_samples, std::size_t n_layers) {
  if (samples.rank() != 2) throw DimensionError("prompt samples must be [k x d]");
  PromptParams p;
  p.mode = mode;
  p.token_prompt = nc::make_var(samples, true);
  if (mode == PromptMode::kSoft) {
    if (!deep_samples.empty()) throw ConfigError("soft prompt given deep samples");
    return p;
  }
  const auto layers = covered_layers(n_layers, deep_samples.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (deep_samples[i].shape() != samples.shape())
      throw DimensionError("deep prompt samples for block " + std::to_string(layers[i]) +
                           " have shape " + nc::shape_str(deep_samples[i].shape()) +
                           ", expected " + nc::shape_str(samples.shape()));
    p.deep_prompts[layers[i]] = nc::make_var(deep_samples[i], true);
  }
  return p;
}

model::ForwardResult soft_forward(nc::Tape& tape, const model::TransformerModel& model,
                                  const PromptParams& prompt, const model::TokenBatch& batch,
                                  model::ForwardOptions options) {
  if (prompt.mode != PromptMode::kSoft) throw ConfigError("soft_forward needs a soft prompt");
  const auto inj = prompt.injection();
  options.prompt = &inj;
  return model::forward(tape, model, batch, options);
}

model::ForwardResult deep_forward(nc::Tape& tape, const model::TransformerModel& model,
                                  const PromptParams& prompt, const model::TokenBatch& batch,
                                  model::ForwardOptions options) {
  if (prompt.mode != PromptMode::kDeep) throw ConfigError("deep_forward needs a deep prompt");
  prompt.validate(model.config());
  const auto inj = prompt.injection();
  options.prompt = &inj;
  return model::forward(tape, model, batch, options);
}

model::ForwardResult prompted_forward(nc::Tape& tape, const model::TransformerModel& model,
                                      const PromptParams& prompt, const model::TokenBatch& batch,
                                      model::ForwardOptions options) {
  return prompt.mode == PromptMode::kSoft ? soft_forward(tape, model, prompt, batch, options)
                                          : deep_forward(tape, model, prompt, batch, options);
}

}  // namespace promptlab::tuner
