// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

namespace promptlab::model {

struct ModelConfig {
  std::size_t n_layers = 4;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t vocab_size = 0;  // taken from the tokenizer
  std::size_t max_seq = 96;
  std::uint64_t seed = 1234;

  std::size_t head_dim() const { return d_model / n_heads; }

  // Throws ConfigError when any extent is zero or d_model is not divisible
  // by n_heads.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace promptlab::model
