// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/tasks/dataset.hpp"

#include <fstream>
#include <sstream>

#include "promptlab/error.hpp"
#include "promptlab/rng.hpp"

namespace promptlab::tasks {

std::string_view task_name(TaskId task) {
  switch (task) {
    case TaskId::kLm: return "LM";
    case TaskId::kQa: return "QA";
    case TaskId::kArith: return "ARITH";
  }
  return "?";
}

TaskId parse_task(std::string_view name) {
  if (name == "LM") return TaskId::kLm;
  if (name == "QA") return TaskId::kQa;
  if (name == "ARITH") return TaskId::kArith;
  throw FormatError("unknown task id '" + std::string(name) + "'");
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kContext: return "context";
    case Role::kQuestion: return "question";
    case Role::kAnswer: return "answer";
    case Role::kPad: return "pad";
  }
  return "?";
}

EncodedExample encode_example(const Tokenizer& tokenizer, const Example& ex) {
  EncodedExample out;
  auto push = [&](TokenId id, Role role) {
    out.tokens.push_back(id);
    out.roles.push_back(role);
  };
  auto push_text = [&](std::string_view text, Role role) {
    for (TokenId id : tokenizer.encode(text)) push(id, role);
  };
  switch (ex.task) {
    case TaskId::kLm:
      push(Tokenizer::kBos, Role::kContext);
      push_text(ex.context, Role::kContext);
      push(Tokenizer::kEos, Role::kContext);
      out.supervised_from = 1;
      break;
    case TaskId::kQa:
      if (ex.answer.empty()) throw FormatError("QA example without answer");
      push(Tokenizer::kBos, Role::kContext);
      push_text(ex.context, Role::kContext);
      push(Tokenizer::kSep, Role::kQuestion);
      push_text(ex.question, Role::kQuestion);
      push(Tokenizer::kSep, Role::kQuestion);
      out.supervised_from = out.tokens.size();
      push_text(ex.answer, Role::kAnswer);
      push(Tokenizer::kEos, Role::kAnswer);
      break;
    case TaskId::kArith:
      if (ex.answer.empty()) throw FormatError("ARITH example without answer");
      push(Tokenizer::kBos, Role::kQuestion);
      push_text(ex.question, Role::kQuestion);
      out.supervised_from = out.tokens.size();
      push_text(ex.answer, Role::kAnswer);
      push(Tokenizer::kEos, Role::kAnswer);
      break;
  }
  return out;
}

Split split_train_val(const Dataset& data, std::uint64_t seed, unsigned val_permille) {
  Split split;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (mix64(seed ^ static_cast<std::uint64_t>(i)) % 1000 < val_permille)
      split.val.push_back(data[i]);
    else
      split.train.push_back(data[i]);
  }
  return split;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& ex : data)
    os << task_name(ex.task) << '\t' << ex.context << '\t' << ex.question << '\t' << ex.answer
       << '\n';
  if (!os) throw FormatError("write failed for " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("dataset " + path.string() + " not found");
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields, got " +
                        std::to_string(fields.size()));
    data.push_back(Example{parse_task(fields[0]), fields[1], fields[2], fields[3]});
  }
  return data;
}

}  // namespace promptlab::tasks
