// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "promptlab/error.hpp"
#include "promptlab/tasks/generators.hpp"

using namespace promptlab;
using namespace promptlab::tasks;

namespace {

// Independent evaluation of "<int><op><int>=".
long long eval_question(const std::string& q) {
  REQUIRE(!q.empty());
  REQUIRE(q.back() == '=');
  const auto pos = q.find_first_of("+-*");
  REQUIRE(pos != std::string::npos);
  REQUIRE(pos > 0);
  const long long x = std::stoll(q.substr(0, pos));
  const long long y = std::stoll(q.substr(pos + 1, q.size() - pos - 2));
  switch (q[pos]) {
    case '+': return x + y;
    case '-': return x - y;
    default: return x * y;
  }
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("promptlab_test_tasks_" + name);
}

}  // namespace

TEST_CASE("tokenizer round trip") {
  const Tokenizer tok;
  CHECK(tok.encode("").empty());
  CHECK(tok.decode(std::vector<TokenId>{}).empty());
  for (const std::string s : {"ab1+", "red box has seven keys.", "17+25=42", "a b c"}) {
    const auto ids = tok.encode(s);
    CHECK(ids.size() == s.size());
    CHECK(tok.decode(ids) == s);
    CHECK(std::find(ids.begin(), ids.end(), Tokenizer::kPad) == ids.end());
  }
  CHECK(tok.vocab_size() == Tokenizer::kFirstChar + tok.alphabet().size());
}

TEST_CASE("tokenizer names the offending character") {
  const Tokenizer tok;
  try {
    tok.encode("abc#d");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'#'") != std::string::npos);
    CHECK(msg.find("offset 3") != std::string::npos);
  }
  CHECK_THROWS_AS(tok.encode("A"), FormatError);
}

TEST_CASE("lm corpus is deterministic and bounded") {
  const auto a = gen_lm_corpus(3, 1000);
  CHECK(a.size() == 1000);
  CHECK(a == gen_lm_corpus(3, 1000));
  CHECK(a != gen_lm_corpus(4, 1000));
  const Tokenizer tok;
  for (const auto& ex : a) {
    CHECK(ex.task == TaskId::kLm);
    CHECK(ex.context.size() >= kMinSentenceChars);
    CHECK(ex.context.size() <= kMaxSentenceChars);
    CHECK_NOTHROW(tok.encode(ex.context));
  }
  CHECK_THROWS_AS(gen_lm_corpus(1, 0), ConfigError);
}

TEST_CASE("lm unigram distribution is heavy-headed") {
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : gen_lm_corpus(9, 5000)) {
    std::istringstream in(ex.context);
    std::string w;
    while (in >> w) {
      while (!w.empty() && (w.back() == '.' || w.back() == ',')) w.pop_back();
      ++counts[w];
    }
  }
  std::vector<std::size_t> freq;
  for (const auto& [w, c] : counts) freq.push_back(c);
  std::sort(freq.rbegin(), freq.rend());
  REQUIRE(freq.size() >= 20);
  CHECK(freq[0] >= 3 * freq[19]);
}

TEST_CASE("qa answers are spans of the context") {
  const auto qa = gen_qa_dataset(5, 2000);
  CHECK(qa.size() == 2000);
  CHECK(qa == gen_qa_dataset(5, 2000));
  for (const auto& ex : qa) {
    CHECK(ex.task == TaskId::kQa);
    CHECK_FALSE(ex.answer.empty());
    CHECK(ex.context.find(ex.answer) != std::string::npos);
    CHECK(ex.context.find(ex.question + " has " + ex.answer) != std::string::npos);
  }
}

TEST_CASE("arithmetic answers pass an integer oracle") {
  const auto ar = gen_arith_dataset(6, 5000, 3);
  CHECK(ar == gen_arith_dataset(6, 5000, 3));
  bool saw_two_plus_two = false;
  std::set<char> ops;
  for (const auto& ex : ar) {
    CHECK(ex.task == TaskId::kArith);
    CHECK_FALSE(ex.answer.empty());
    CHECK(std::stoll(ex.answer) == eval_question(ex.question));
    ops.insert(ex.question[ex.question.find_first_of("+-*")]);
    saw_two_plus_two |= ex.question == "2+2=" && ex.answer == "4";
  }
  CHECK(ops.size() == 3);
  for (const auto& ex : gen_arith_dataset(1, 20000, 1))
    if (ex.question == "2+2=") saw_two_plus_two |= ex.answer == "4";
  CHECK(saw_two_plus_two);
  CHECK_THROWS_AS(gen_arith_dataset(1, 10, 0), ConfigError);
}

TEST_CASE("pretraining mixture leaves the tuning phrasing out") {
  const auto corpus = gen_pretrain_corpus(2, 3000);
  std::map<TaskId, std::size_t> per;
  for (const auto& ex : corpus) {
    ++per[ex.task];
    if (ex.task == TaskId::kQa)
      CHECK((ex.question.rfind("what is in ", 0) == 0 || ex.question.rfind("how many in ", 0) == 0));
  }
  CHECK(per.size() == 3);
}

TEST_CASE("example encoding layout") {
  const Tokenizer tok;
  const Example qa{TaskId::kQa, "red box has two keys.", "red box", "two keys"};
  const auto e = encode_example(tok, qa);
  CHECK(e.tokens.front() == Tokenizer::kBos);
  CHECK(e.tokens.back() == Tokenizer::kEos);
  CHECK(e.tokens.size() == 1 + qa.context.size() + 1 + qa.question.size() + 1 + qa.answer.size() + 1);
  CHECK(e.supervised_from == e.tokens.size() - 1 - qa.answer.size());
  CHECK(e.roles[e.supervised_from] == Role::kAnswer);
  CHECK(tok.decode(std::span(e.tokens).subspan(e.supervised_from, qa.answer.size())) == qa.answer);

  const Example ar{TaskId::kArith, "", "2+2=", "4"};
  const auto a = encode_example(tok, ar);
  CHECK(a.tokens.size() == 1 + 4 + 1 + 1);
  CHECK(a.supervised_from == 5);

  const Example lm{TaskId::kLm, "the cat sat.", "", ""};
  CHECK(encode_example(tok, lm).supervised_from == 1);
}

TEST_CASE("train/val split is disjoint and covering") {
  const auto qa = gen_qa_dataset(8, 1000);
  const auto s = split_train_val(qa, 3);
  CHECK(s.train.size() + s.val.size() == qa.size());
  CHECK(s.val.size() > 100);
  CHECK(s.val.size() < 300);
  const auto again = split_train_val(qa, 3);
  CHECK(again.train == s.train);
  CHECK(again.val == s.val);
  std::multiset<std::string> seen;
  for (const auto& ex : qa) seen.insert(ex.context + "|" + ex.question);
  for (const auto* part : {&s.train, &s.val})
    for (const auto& ex : *part) {
      auto it = seen.find(ex.context + "|" + ex.question);
      REQUIRE(it != seen.end());
      seen.erase(it);
    }
  CHECK(seen.empty());
}

TEST_CASE("dataset files round trip") {
  Dataset data = gen_qa_dataset(1, 20);
  const auto ar = gen_arith_dataset(1, 20);
  const auto lm = gen_lm_corpus(1, 20);
  data.insert(data.end(), ar.begin(), ar.end());
  data.insert(data.end(), lm.begin(), lm.end());
  const auto path = temp_file("roundtrip.tsv");
  write_dataset(path, data);
  CHECK(read_dataset(path) == data);
  std::filesystem::remove(path);
}

TEST_CASE("malformed dataset records are rejected") {
  const auto path = temp_file("bad.tsv");
  {
    std::ofstream out(path);
    out << "QA\tctx\tq\n";
  }
  CHECK_THROWS_AS(read_dataset(path), FormatError);
  {
    std::ofstream out(path);
    out << "XX\tctx\tq\ta\n";
  }
  CHECK_THROWS_AS(read_dataset(path), FormatError);
  std::filesystem::remove(path);
  CHECK(parse_task("ARITH") == TaskId::kArith);
  CHECK(task_name(TaskId::kQa) == "QA");
}
