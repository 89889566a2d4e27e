// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptlab::tasks {

using TokenId = std::int32_t;

// Character-level vocabulary: four specials followed by the printable
// alphabet. PAD is always id 0.
class Tokenizer {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kSep = 2;
  static constexpr TokenId kEos = 3;
  static constexpr TokenId kFirstChar = 4;

  Tokenizer();

  // Throws FormatError naming the first character outside the alphabet.
  std::vector<TokenId> encode(std::string_view text) const;

  // Specials render as <pad>, <bos>, <sep>, <eos>.
  std::string decode(std::span<const TokenId> ids) const;

  std::size_t vocab_size() const { return kFirstChar + alphabet_.size(); }
  std::string_view alphabet() const { return alphabet_; }
  bool contains(char c) const;

 private:
  std::string alphabet_;
  std::array<TokenId, 256> lookup_{};
};

}  // namespace promptlab::tasks
