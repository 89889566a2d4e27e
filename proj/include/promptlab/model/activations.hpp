// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "promptlab/model/transformer.hpp"
#include "promptlab/numcore/tensor.hpp"
#include "promptlab/tasks/dataset.hpp"

namespace promptlab::model {

struct ActivationLabel {
  tasks::TaskId task = tasks::TaskId::kLm;
  std::uint32_t sequence = 0;
  std::uint32_t position = 0;
  tasks::Role role = tasks::Role::kContext;

  bool operator==(const ActivationLabel&) const = default;
};

// Level 0 is embedded input (token + position); level l >= 1 is the
// residual stream after block l, before the final norm.
struct ActivationSet {
  std::size_t layer = 0;
  nc::Tensor vectors;  // [M x d]
  std::vector<ActivationLabel> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return vectors.cols(); }
};

struct CaptureOptions {
  // When nonzero, every sequence is right-padded to this length and the pad
  // positions are captured with role pad.
  std::size_t pad_to = 0;
  std::size_t batch = 32;
};

// Captures activations of up to max_samples sequences. When the dataset is
// larger, a seeded shuffle picks the sample. Requires a frozen model.
ActivationSet capture_activations(const TransformerModel& model, const tasks::Tokenizer& tokenizer,
                                  const tasks::Dataset& data, std::size_t layer,
                                  std::size_t max_samples, std::uint64_t seed,
                                  const CaptureOptions& options = {});

// One mean vector per sequence (pad rows excluded).
ActivationSet sequence_means(const ActivationSet& set);

// Vectors with the given roles only.
ActivationSet filter_roles(const ActivationSet& set, std::vector<tasks::Role> roles);

ActivationSet concat(const ActivationSet& a, const ActivationSet& b);

}  // namespace promptlab::model
