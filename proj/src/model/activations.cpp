// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/model/activations.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "promptlab/error.hpp"
#include "promptlab/rng.hpp"

namespace promptlab::model {

ActivationSet capture_activations(const TransformerModel& model, const tasks::Tokenizer& tokenizer,
                                  const tasks::Dataset& data, std::size_t layer,
                                  std::size_t max_samples, std::uint64_t seed,
                                  const CaptureOptions& options) {
  if (!model.frozen()) throw ConfigError("capture_activations requires a frozen model");
  if (layer > model.config().n_layers)
    throw DimensionError("capture layer " + std::to_string(layer) + " out of range [0, " +
                         std::to_string(model.config().n_layers) + "]");
  if (data.empty() || max_samples == 0) throw ConfigError("nothing to capture");

  std::vector<std::size_t> pick(data.size());
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  if (data.size() > max_samples) {
    Rng rng(derive_seed(seed, "capture"));
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(max_samples);
  }

  const std::size_t d = model.config().d_model;
  ActivationSet set;
  set.layer = layer;
  std::vector<double> values;
  const std::size_t bs = std::max<std::size_t>(1, options.batch);
  for (std::size_t start = 0; start < pick.size(); start += bs) {
    const std::size_t n = std::min(bs, pick.size() - start);
    std::vector<std::vector<tasks::TokenId>> seqs;
    std::vector<tasks::EncodedExample> enc;
    for (std::size_t i = 0; i < n; ++i) {
      enc.push_back(tasks::encode_example(tokenizer, data[pick[start + i]]));
      seqs.push_back(enc.back().tokens);
    }
    auto batch = TokenBatch::from_sequences(seqs, options.pad_to);
    nc::Tape tape;
    ForwardOptions fo;
    fo.capture_layers = {layer};
    auto fr = forward(tape, model, batch, fo);
    const nc::Tensor& cap = fr.captured.at(layer);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t keep = options.pad_to > 0 ? batch.seq_len : batch.lengths[i];
      for (std::size_t t = 0; t < keep; ++t) {
        auto row = cap.row(i * batch.seq_len + t);
        values.insert(values.end(), row.begin(), row.end());
        const bool pad = t >= batch.lengths[i];
        set.labels.push_back(ActivationLabel{data[pick[start + i]].task,
                                             static_cast<std::uint32_t>(pick[start + i]),
                                             static_cast<std::uint32_t>(t),
                                             pad ? tasks::Role::kPad : enc[i].roles[t]});
      }
    }
  }
  set.vectors = nc::Tensor({set.labels.size(), d}, std::move(values));
  return set;
}

ActivationSet sequence_means(const ActivationSet& set) {
  const std::size_t d = set.dim();
  std::map<std::uint32_t, std::pair<std::vector<double>, std::size_t>> acc;
  std::vector<std::uint32_t> order;
  std::map<std::uint32_t, tasks::TaskId> task;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& lab = set.labels[i];
    if (lab.role == tasks::Role::kPad) continue;
    auto [it, inserted] = acc.try_emplace(lab.sequence, std::vector<double>(d, 0.0), 0);
    if (inserted) {
      order.push_back(lab.sequence);
      task[lab.sequence] = lab.task;
    }
    auto row = set.vectors.row(i);
    for (std::size_t j = 0; j < d; ++j) it->second.first[j] += row[j];
    ++it->second.second;
  }
  ActivationSet out;
  out.layer = set.layer;
  std::vector<double> values;
  for (auto seq : order) {
    auto& [sum, count] = acc[seq];
    for (double v : sum) values.push_back(v / static_cast<double>(count));
    out.labels.push_back(ActivationLabel{task[seq], seq, 0, tasks::Role::kContext});
  }
  if (out.labels.empty()) throw ConfigError("sequence_means of an empty activation set");
  out.vectors = nc::Tensor({out.labels.size(), d}, std::move(values));
  return out;
}

ActivationSet filter_roles(const ActivationSet& set, std::vector<tasks::Role> roles) {
  ActivationSet out;
  out.layer = set.layer;
  std::vector<double> values;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (std::find(roles.begin(), roles.end(), set.labels[i].role) == roles.end()) continue;
    auto row = set.vectors.row(i);
    values.insert(values.end(), row.begin(), row.end());
    out.labels.push_back(set.labels[i]);
  }
  if (out.labels.empty()) throw ConfigError("role filter selected no activations");
  out.vectors = nc::Tensor({out.labels.size(), set.dim()}, std::move(values));
  return out;
}

ActivationSet concat(const ActivationSet& a, const ActivationSet& b) {
  if (a.dim() != b.dim()) throw DimensionError("activation sets differ in dimension");
  ActivationSet out;
  out.layer = a.layer;
  const nc::Tensor parts[] = {a.vectors, b.vectors};
  out.vectors = nc::concat_rows(parts);
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

}  // namespace promptlab::model
