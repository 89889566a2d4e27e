// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/tasks/tokenizer.hpp"

#include <string>

#include "promptlab/error.hpp"

namespace promptlab::tasks {

namespace {

constexpr std::string_view kAlphabet = " abcdefghijklmnopqrstuvwxyz0123456789+-*=.,?:";

}  // namespace

Tokenizer::Tokenizer() : alphabet_(kAlphabet) {
  lookup_.fill(-1);
  for (std::size_t i = 0; i < alphabet_.size(); ++i)
    lookup_[static_cast<unsigned char>(alphabet_[i])] = kFirstChar + static_cast<TokenId>(i);
}

bool Tokenizer::contains(char c) const { return lookup_[static_cast<unsigned char>(c)] >= 0; }

std::vector<TokenId> Tokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  ids.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const TokenId id = lookup_[static_cast<unsigned char>(text[i])];
    if (id < 0)
      throw FormatError("character '" + std::string(1, text[i]) + "' (byte " +
                        std::to_string(static_cast<unsigned char>(text[i])) + ") at offset " +
                        std::to_string(i) + " is not in the tokenizer alphabet");
    ids.push_back(id);
  }
  return ids;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    switch (id) {
      case kPad: out += "<pad>"; break;
      case kBos: out += "<bos>"; break;
      case kSep: out += "<sep>"; break;
      case kEos: out += "<eos>"; break;
      default:
        if (id < kFirstChar || static_cast<std::size_t>(id) >= vocab_size())
          throw FormatError("token id " + std::to_string(id) + " is outside the vocabulary");
        out += alphabet_[static_cast<std::size_t>(id - kFirstChar)];
    }
  }
  return out;
}

}  // namespace promptlab::tasks
