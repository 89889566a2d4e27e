// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "promptlab/tasks/tokenizer.hpp"

namespace promptlab::tasks {

enum class TaskId : std::uint8_t { kLm, kQa, kArith };

std::string_view task_name(TaskId task);
// Accepts "LM", "QA", "ARITH"; throws FormatError otherwise.
TaskId parse_task(std::string_view name);

struct Example {
  TaskId task = TaskId::kLm;
  std::string context;
  std::string question;
  std::string answer;

  bool operator==(const Example&) const = default;
};

using Dataset = std::vector<Example>;

enum class Role : std::uint8_t { kContext, kQuestion, kAnswer, kPad };

std::string_view role_name(Role role);

// Token layout per task:
//   LM     BOS context EOS
//   QA     BOS context SEP question SEP answer EOS
//   ARITH  BOS question answer EOS
// `supervised_from` is the first token index whose prediction is scored:
// 1 for LM (full next-token loss), the first answer token otherwise.
struct EncodedExample {
  std::vector<TokenId> tokens;
  std::vector<Role> roles;
  std::size_t supervised_from = 1;
};

EncodedExample encode_example(const Tokenizer& tokenizer, const Example& example);

// Deterministic split: example i goes to validation iff
// mix64(seed ^ i) % 1000 < val_permille. The two halves are disjoint and
// together cover the input.
struct Split {
  Dataset train;
  Dataset val;
};
Split split_train_val(const Dataset& data, std::uint64_t seed, unsigned val_permille = 200);

// One record per line: task_id TAB context TAB question TAB answer.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace promptlab::tasks
