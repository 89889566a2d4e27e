// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/tuner/tune.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "promptlab/error.hpp"
#include "promptlab/model/checkpoint.hpp"
#include "promptlab/numcore/adam.hpp"
#include "promptlab/numcore/ops.hpp"
#include "promptlab/rng.hpp"

namespace promptlab::tuner {

namespace {

using Encoded = std::vector<tasks::EncodedExample>;

Encoded encode_all(const tasks::Tokenizer& tok, std::span<const tasks::Example> data) {
  Encoded out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(tasks::encode_example(tok, ex));
  return out;
}

model::TokenBatch token_batch(std::span<const tasks::EncodedExample* const> items) {
  std::vector<std::vector<tasks::TokenId>> seqs;
  seqs.reserve(items.size());
  for (const auto* e : items) seqs.push_back(e->tokens);
  return model::TokenBatch::from_sequences(seqs);
}

struct Supervision {
  std::vector<std::int32_t> targets;
  std::vector<std::uint8_t> mask;
};

// Logit row prefix + u - 1 predicts token u for every supervised u.
Supervision supervise(const model::ForwardResult& fr,
                      std::span<const tasks::EncodedExample* const> items) {
  Supervision s;
  const std::size_t P = fr.positions;
  s.targets.assign(items.size() * P, 0);
  s.mask.assign(items.size() * P, 0);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& e = *items[i];
    for (std::size_t u = std::max<std::size_t>(e.supervised_from, 1); u < e.tokens.size(); ++u) {
      const std::size_t row = i * P + fr.prefix + u - 1;
      s.targets[row] = e.tokens[u];
      s.mask[row] = 1;
    }
  }
  return s;
}

PromptParams without_grad(const PromptParams& p) {
  PromptParams c = p.clone();
  for (auto& v : c.parameters()) v->requires_grad = false;
  return c;
}

PromptParams with_grad(const PromptParams& p) {
  PromptParams c = p.clone();
  for (auto& v : c.parameters()) v->requires_grad = true;
  return c;
}

EvalMetrics evaluate_encoded(const model::TransformerModel& model, const PromptParams* prompt,
                             const Encoded& data, std::size_t batch) {
  if (data.empty()) throw ConfigError("evaluate needs a non-empty dataset");
  if (batch == 0) throw ConfigError("evaluation batch must be positive");
  std::optional<PromptParams> frozen_prompt;
  if (prompt) frozen_prompt = without_grad(*prompt);

  EvalMetrics m;
  double loss_sum = 0.0;
  std::size_t correct_tokens = 0, exact = 0;
  std::vector<const tasks::EncodedExample*> items;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    items.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + batch); ++i)
      items.push_back(&data[i]);
    const auto tb = token_batch(items);
    nc::Tape tape;
    const auto fr = frozen_prompt ? prompted_forward(tape, model, *frozen_prompt, tb)
                                  : model::forward(tape, model, tb);
    const auto sup = supervise(fr, items);
    const auto& logits = fr.logits->value;
    for (std::size_t i = 0; i < items.size(); ++i) {
      bool all = true;
      for (std::size_t r = i * fr.positions; r < (i + 1) * fr.positions; ++r) {
        if (!sup.mask[r]) continue;
        const auto row = logits.row(r);
        const auto target = static_cast<std::size_t>(sup.targets[r]);
        loss_sum += nc::log_sum_exp(row) - row[target];
        const auto arg = static_cast<std::size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
        if (arg == target) {
          ++correct_tokens;
        } else {
          all = false;
        }
        ++m.tokens;
      }
      if (all) ++exact;
    }
  }
  if (m.tokens == 0) throw ConfigError("evaluation data has no supervised positions");
  m.examples = data.size();
  m.loss = loss_sum / static_cast<double>(m.tokens);
  m.exact_match = static_cast<double>(exact) / static_cast<double>(m.examples);
  m.token_accuracy = static_cast<double>(correct_tokens) / static_cast<double>(m.tokens);
  if (!std::isfinite(m.loss)) throw NumericError("non-finite evaluation loss");
  return m;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void TuneConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("tune lr must be positive");
  if (batch == 0) throw ConfigError("tune batch must be positive");
  if (eval_every == 0) throw ConfigError("tune eval_every must be positive");
  if (!(min_delta >= 0.0)) throw ConfigError("tune min_delta must be non-negative");
}

EvalMetrics evaluate(const model::TransformerModel& model, const PromptParams* prompt,
                     const tasks::Tokenizer& tokenizer, std::span<const tasks::Example> data,
                     std::size_t batch) {
  if (!model.frozen()) throw ConfigError("evaluate needs a frozen model");
  return evaluate_encoded(model, prompt, encode_all(tokenizer, data), batch);
}

TuneResult tune(const model::TransformerModel& model, const PromptParams& prompt,
                const tasks::Tokenizer& tokenizer, std::span<const tasks::Example> train,
                std::span<const tasks::Example> val, const TuneConfig& config) {
  if (!model.frozen()) throw ConfigError("tune refuses to run on an unfrozen model");
  config.validate();
  prompt.validate(model.config());
  if (train.empty()) throw ConfigError("tune needs training data");
  if (val.empty()) throw ConfigError("tune needs validation data");
  if (prompt.parameters().empty()) throw ConfigError("tune needs at least one prompt tensor");

  const Encoded train_enc = encode_all(tokenizer, train);
  Encoded val_enc = encode_all(tokenizer, val);
  if (config.max_val_examples > 0 && val_enc.size() > config.max_val_examples)
    val_enc.resize(config.max_val_examples);

  TuneResult result;
  result.init_snapshot = without_grad(prompt);
  PromptParams work = with_grad(prompt);
  result.best_val_loss = evaluate_encoded(model, &work, val_enc, 32).loss;
  result.history.push_back({0, std::nullopt, result.best_val_loss});
  PromptParams best = without_grad(work);
  double reference = result.best_val_loss;
  std::size_t reference_step = 0;

  nc::Adam adam(work.parameters(), nc::AdamConfig{.lr = config.lr});
  Rng rng(derive_seed(config.seed, "tune-order"));
  std::vector<std::size_t> order(train_enc.size());
  std::size_t cursor = order.size();
  std::vector<const tasks::EncodedExample*> items;

  for (std::size_t step = 1; step <= config.steps; ++step) {
    items.clear();
    while (items.size() < config.batch) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      items.push_back(&train_enc[order[cursor++]]);
    }
    const auto tb = token_batch(items);
    double train_loss = 0.0;
    try {
      nc::Tape tape;
      const auto fr = prompted_forward(tape, model, work, tb);
      const auto sup = supervise(fr, items);
      auto loss = nc::cross_entropy(tape, fr.logits, sup.targets, sup.mask);
      tape.backward(loss);
      adam.step();
      train_loss = loss->value[0];
    } catch (const NumericError& e) {
      throw NumericError("tuning diverged at step " + std::to_string(step) + ": " + e.what());
    }
    adam.zero_grad();
    result.steps_run = step;
    HistoryEntry entry{step, train_loss, std::nullopt};
    if (step % config.eval_every == 0 || step == config.steps) {
      const double v = evaluate_encoded(model, &work, val_enc, 32).loss;
      entry.val_loss = v;
      if (v < result.best_val_loss) {
        result.best_val_loss = v;
        result.best_step = step;
        best = without_grad(work);
      }
      if (v < reference - config.min_delta) {
        reference = v;
        reference_step = step;
      }
    }
    result.history.push_back(entry);
    if (config.patience > 0 && entry.val_loss && step - reference_step >= config.patience) {
      result.stopped_early = step < config.steps;
      break;
    }
  }
  result.tuned = best;
  result.final_metrics = evaluate_encoded(model, &result.tuned, val_enc, 32);
  return result;
}

std::optional<std::size_t> steps_to_threshold(std::span<const HistoryEntry> history,
                                              double threshold) {
  for (const auto& h : history)
    if (h.val_loss && *h.val_loss <= threshold) return h.step;
  return std::nullopt;
}

void write_history_csv(const std::filesystem::path& path, std::span<const HistoryEntry> history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "step,train_loss,val_loss\n";
  for (const auto& h : history) {
    out << h.step << ',';
    if (h.train_loss) out << fmt(*h.train_loss);
    out << ',';
    if (h.val_loss) out << fmt(*h.val_loss);
    out << '\n';
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

namespace {

void append_prompt(std::vector<model::NamedTensor>& out, const std::string& tag,
                   const PromptParams& p) {
  if (p.token_prompt) out.push_back({tag + ".token", p.token_prompt->value});
  for (const auto& [layer, v] : p.deep_prompts)
    out.push_back({tag + ".deep." + std::to_string(layer), v->value});
}

PromptParams read_prompt(std::span<const model::NamedTensor> tensors, const std::string& tag,
                         PromptMode mode, bool truncate) {
  PromptParams p;
  p.mode = mode;
  p.truncate_token_prompt = truncate;
  const std::string deep = tag + ".deep.";
  for (const auto& t : tensors) {
    if (t.name == tag + ".token") {
      p.token_prompt = nc::make_var(t.tensor, false);
    } else if (t.name.starts_with(deep)) {
      std::size_t layer = 0;
      try {
        layer = std::stoul(t.name.substr(deep.size()));
      } catch (const std::exception&) {
        throw FormatError("bad deep prompt tensor name '" + t.name + "'");
      }
      p.deep_prompts[layer] = nc::make_var(t.tensor, false);
    }
  }
  if (!p.token_prompt) throw FormatError("missing tensor " + tag + ".token");
  return p;
}

}  // namespace

void save_tune_result(const std::filesystem::path& path, const TuneResult& result) {
  std::vector<model::NamedTensor> tensors;
  const auto& p = result.tuned;
  tensors.push_back({"meta.prompt",
                     nc::Tensor::vector({p.mode == PromptMode::kDeep ? 1.0 : 0.0,
                                         static_cast<double>(p.length()),
                                         p.truncate_token_prompt ? 1.0 : 0.0,
                                         static_cast<double>(result.best_step),
                                         static_cast<double>(result.steps_run),
                                         result.best_val_loss})});
  append_prompt(tensors, "init", result.init_snapshot);
  append_prompt(tensors, "tuned", result.tuned);
  model::save_tensors(path, tensors);
}

SavedPrompts load_tune_result(const std::filesystem::path& path) {
  const auto tensors = model::load_tensors(path);
  const auto& meta = model::find_tensor(tensors, "meta.prompt");
  if (meta.size() != 6) throw FormatError("meta.prompt must hold 6 values");
  const auto mode = meta[0] == 1.0 ? PromptMode::kDeep : PromptMode::kSoft;
  const bool truncate = meta[2] == 1.0;
  SavedPrompts s;
  s.init = read_prompt(tensors, "init", mode, truncate);
  s.tuned = read_prompt(tensors, "tuned", mode, truncate);
  s.best_step = static_cast<std::size_t>(meta[3]);
  s.steps_run = static_cast<std::size_t>(meta[4]);
  s.best_val_loss = meta[5];
  return s;
}

}  // namespace promptlab::tuner
