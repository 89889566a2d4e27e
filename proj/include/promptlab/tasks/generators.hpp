// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptlab/tasks/dataset.hpp"

namespace promptlab::tasks {

// Sentence length bounds (characters) for the LM generator.
inline constexpr std::size_t kMinSentenceChars = 12;
inline constexpr std::size_t kMaxSentenceChars = 64;

// Template-grammar sentences over a fixed lexicon. Word choice within each
// grammatical slot is Zipf-weighted, so the unigram distribution is
// heavy-headed.
Dataset gen_lm_corpus(std::uint64_t seed, std::size_t n_sentences);

// Two-fact contexts such as "red box has seven keys. blue jar has two pens."
// The question names one container, the answer is the literal span that
// follows "has" in its fact.
Dataset gen_qa_dataset(std::uint64_t seed, std::size_t n);

// Two-operand +, -, * problems; each operand has 1..max_digits digits.
// Question "17+25=", answer "42".
Dataset gen_arith_dataset(std::uint64_t seed, std::size_t n, unsigned max_digits = 3);

// Base-model training mixture: LM sentences, QA records phrased with
// explicit questions ("what is in red box", "how many in red box") and
// arithmetic records. The bare-entity QA phrasing used for tuning is
// deliberately absent.
Dataset gen_pretrain_corpus(std::uint64_t seed, std::size_t n);

// The words the generators draw from.
std::span<const std::string_view> lexicon();

}  // namespace promptlab::tasks
