// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/model/transformer.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "promptlab/error.hpp"
#include "promptlab/numcore/ops.hpp"
#include "promptlab/rng.hpp"

namespace promptlab::model {

void ModelConfig::validate() const {
  if (n_layers == 0 || d_model == 0 || n_heads == 0 || d_ff == 0 || max_seq == 0)
    throw ConfigError("model extents must be positive");
  if (vocab_size == 0) throw ConfigError("model vocab_size must be set from the tokenizer");
  if (d_model % n_heads != 0)
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                      std::to_string(n_heads));
}

namespace {

nc::Var param(nc::Shape shape) { return nc::make_var(nc::Tensor(std::move(shape)), true); }

}  // namespace

TransformerModel::TransformerModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.d_model;
  embedding_ = param({config_.vocab_size, d});
  positional_ = param({config_.max_seq, d});
  layers_.resize(config_.n_layers);
  for (auto& l : layers_) {
    l.ln1_gain = param({d});
    l.ln1_bias = param({d});
    l.wq = param({d, d});
    l.wk = param({d, d});
    l.wv = param({d, d});
    l.wo = param({d, d});
    l.ln2_gain = param({d});
    l.ln2_bias = param({d});
    l.w_up = param({d, config_.d_ff});
    l.w_down = param({config_.d_ff, d});
  }
  final_gain_ = param({d});
  final_bias_ = param({d});
  unembedding_ = param({d, config_.vocab_size});
}

std::vector<std::pair<std::string, nc::Var>> TransformerModel::named_parameters() const {
  std::vector<std::pair<std::string, nc::Var>> out;
  out.emplace_back("embedding", embedding_);
  out.emplace_back("positional", positional_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto p = "layers." + std::to_string(i) + ".";
    const auto& l = layers_[i];
    out.emplace_back(p + "ln1.gain", l.ln1_gain);
    out.emplace_back(p + "ln1.bias", l.ln1_bias);
    out.emplace_back(p + "attn.wq", l.wq);
    out.emplace_back(p + "attn.wk", l.wk);
    out.emplace_back(p + "attn.wv", l.wv);
    out.emplace_back(p + "attn.wo", l.wo);
    out.emplace_back(p + "ln2.gain", l.ln2_gain);
    out.emplace_back(p + "ln2.bias", l.ln2_bias);
    out.emplace_back(p + "mlp.up", l.w_up);
    out.emplace_back(p + "mlp.down", l.w_down);
  }
  out.emplace_back("final_norm.gain", final_gain_);
  out.emplace_back("final_norm.bias", final_bias_);
  out.emplace_back("unembedding", unembedding_);
  return out;
}

std::vector<nc::Var> TransformerModel::trainable_parameters() const {
  if (frozen_) throw ConfigError("model is frozen; its parameters cannot be trained");
  std::vector<nc::Var> out;
  for (auto& [name, v] : named_parameters()) out.push_back(v);
  return out;
}

void TransformerModel::freeze() {
  for (auto& [name, v] : named_parameters()) {
    v->requires_grad = false;
    v->grad.reset();
  }
  frozen_ = true;
}

void TransformerModel::unfreeze() {
  for (auto& [name, v] : named_parameters()) v->requires_grad = true;
  frozen_ = false;
}

std::uint64_t TransformerModel::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto& [name, v] : named_parameters()) h = nc::checksum(v->value, h);
  return h;
}

TransformerModel build_model(const ModelConfig& config) {
  TransformerModel model(config);
  Rng rng(derive_seed(config.seed, "model-init"));
  std::normal_distribution<double> normal(0.0, 0.02);
  for (auto& [name, v] : model.named_parameters()) {
    const bool is_norm = name.find("norm") != std::string::npos ||
                         name.find(".ln") != std::string::npos;
    if (is_norm) {
      const bool gain = name.ends_with("gain");
      v->value.fill(gain ? 1.0 : 0.0);
    } else {
      for (double& x : v->value.values()) x = normal(rng);
    }
  }
  return model;
}

TokenBatch TokenBatch::from_sequences(std::span<const std::vector<tasks::TokenId>> sequences,
                                      std::size_t pad_to) {
  if (sequences.empty()) throw DimensionError("empty token batch");
  TokenBatch b;
  b.batch = sequences.size();
  for (const auto& s : sequences) {
    if (s.empty()) throw DimensionError("empty sequence in token batch");
    b.seq_len = std::max(b.seq_len, s.size());
    b.lengths.push_back(s.size());
  }
  if (pad_to > 0) {
    if (pad_to < b.seq_len) throw DimensionError("pad_to shorter than the longest sequence");
    b.seq_len = pad_to;
  }
  b.ids.assign(b.batch * b.seq_len, tasks::Tokenizer::kPad);
  for (std::size_t i = 0; i < b.batch; ++i)
    std::copy(sequences[i].begin(), sequences[i].end(),
              b.ids.begin() + static_cast<std::ptrdiff_t>(i * b.seq_len));
  return b;
}

std::size_t PromptInjection::token_length() const {
  return token_prompt ? token_prompt->value.rows() : 0;
}

namespace {

nc::Var block_forward(nc::Tape& t, const LayerParams& p, const nc::Var& x, std::size_t batch,
                      std::size_t len, std::size_t heads) {
  auto a = nc::layer_norm(t, x, p.ln1_gain, p.ln1_bias);
  auto q = nc::matmul(t, a, p.wq);
  auto k = nc::matmul(t, a, p.wk);
  auto v = nc::matmul(t, a, p.wv);
  auto att = nc::causal_attention(t, q, k, v, batch, len, heads);
  auto h = nc::add(t, x, nc::matmul(t, att, p.wo));
  auto m = nc::layer_norm(t, h, p.ln2_gain, p.ln2_bias);
  auto f = nc::matmul(t, nc::gelu(t, nc::matmul(t, m, p.w_up)), p.w_down);
  return nc::add(t, h, f);
}

nc::Tensor extract_rows(const nc::Tensor& x, std::size_t batch, std::size_t width,
                        std::size_t skip) {
  const std::size_t d = x.cols();
  const std::size_t keep = width - skip;
  nc::Tensor out({batch * keep, d});
  for (std::size_t b = 0; b < batch; ++b)
    std::copy(x.values().begin() + static_cast<std::ptrdiff_t>((b * width + skip) * d),
              x.values().begin() + static_cast<std::ptrdiff_t>((b + 1) * width * d),
              out.values().begin() + static_cast<std::ptrdiff_t>(b * keep * d));
  return out;
}

void check_prompt(const nc::Var& v, std::size_t d, std::string_view what) {
  if (v->value.rank() != 2 || v->value.cols() != d)
    throw DimensionError(std::string(what) + " must be [k x " + std::to_string(d) + "], got " +
                         nc::shape_str(v->value.shape()));
}

}  // namespace

ForwardResult forward(nc::Tape& tape, const TransformerModel& model, const TokenBatch& batch,
                      const ForwardOptions& options) {
  const ModelConfig& cfg = model.config();
  const std::size_t B = batch.batch;
  const std::size_t T = batch.seq_len;
  if (B == 0 || T == 0 || batch.ids.size() != B * T) throw DimensionError("malformed token batch");
  const PromptInjection* prompt = options.prompt;
  std::size_t k = 0;
  if (prompt && prompt->token_prompt) {
    check_prompt(prompt->token_prompt, cfg.d_model, "token prompt");
    k = prompt->token_length();
  }
  if (prompt)
    for (auto& [layer, p] : prompt->layer_prompts) {
      if (layer >= cfg.n_layers)
        throw DimensionError("layer prompt for block " + std::to_string(layer) +
                             " but the model has " + std::to_string(cfg.n_layers));
      check_prompt(p, cfg.d_model, "layer prompt");
    }
  if (k + T > cfg.max_seq)
    throw DimensionError("sequence of " + std::to_string(T) + " tokens plus " + std::to_string(k) +
                         " prompt rows exceeds max_seq " + std::to_string(cfg.max_seq));
  for (std::size_t l : options.capture_layers)
    if (l > cfg.n_layers) throw DimensionError("capture layer " + std::to_string(l) + " out of range");

  ForwardResult result;
  result.batch = B;
  const auto wants = [&](std::size_t level) {
    return std::find(options.capture_layers.begin(), options.capture_layers.end(), level) !=
           options.capture_layers.end();
  };

  auto x = nc::gather_rows(tape, model.embedding(), batch.ids);
  if (k > 0) x = nc::prepend_rows(tape, prompt->token_prompt, x, B);
  std::size_t width = k + T;
  std::size_t prefix = k;
  {
    std::vector<std::int32_t> pos(B * width);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < width; ++i) pos[b * width + i] = static_cast<std::int32_t>(i);
    x = nc::add(tape, x, nc::gather_rows(tape, model.positional(), pos));
  }
  const auto capture = [&](std::size_t level) {
    if (!wants(level)) return;
    result.captured[level] =
        extract_rows(x->value, B, width, options.capture_prompt_positions ? 0 : prefix);
  };
  capture(0);

  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const auto& params = model.layers()[l];
    nc::Var layer_prompt;
    if (prompt) {
      auto it = prompt->layer_prompts.find(l);
      if (it != prompt->layer_prompts.end()) layer_prompt = it->second;
    }
    LayerWidth w{l, width, width, width};
    if (layer_prompt) {
      if (width > cfg.max_seq)
        throw DimensionError("block " + std::to_string(l) + " input of " + std::to_string(width) +
                             " rows exceeds max_seq");
      const std::size_t kl = layer_prompt->value.rows();
      auto xin = nc::prepend_rows(tape, layer_prompt, x, B);
      w.internal = xin->value.rows() / B;
      auto y = block_forward(tape, params, xin, B, w.internal, cfg.n_heads);
      x = nc::drop_leading_rows(tape, y, B, kl);
      w.emitted = x->value.rows() / B;
      if (w.internal != width + kl || w.emitted != width)
        throw DimensionError("prepend/truncate width law violated at block " + std::to_string(l));
    } else {
      x = block_forward(tape, params, x, B, width, cfg.n_heads);
    }
    if (l == 0 && prompt && prompt->truncate_token_prompt && prefix > 0) {
      x = nc::drop_leading_rows(tape, x, B, prefix);
      width -= prefix;
      prefix = 0;
      w.emitted = width;
    }
    if (options.on_layer) options.on_layer(w);
    capture(l + 1);
  }

  auto h = nc::layer_norm(tape, x, model.final_gain(), model.final_bias());
  result.logits = nc::matmul(tape, h, model.unembedding());
  result.positions = width;
  result.prefix = prefix;
  return result;
}

}  // namespace promptlab::model
