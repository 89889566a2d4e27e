// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gradcheck.hpp"
#include "promptlab/error.hpp"
#include "promptlab/tasks/generators.hpp"
#include "promptlab/tuner/tune.hpp"

using namespace promptlab;
using tuner::PromptMode;

namespace {

model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.n_layers = 3;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.vocab_size = tasks::Tokenizer().vocab_size();
  c.max_seq = 96;
  c.seed = 11;
  return c;
}

model::TransformerModel frozen_model() {
  auto m = model::build_model(tiny_config());
  m.freeze();
  return m;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("promptlab_test_tuner_" + name);
}

tuner::TuneConfig quick_config() {
  tuner::TuneConfig c;
  c.steps = 30;
  c.batch = 8;
  c.eval_every = 10;
  c.lr = 1e-2;
  c.seed = 4;
  return c;
}

}  // namespace

TEST_CASE("mode names") {
  CHECK(tuner::parse_mode("soft") == PromptMode::kSoft);
  CHECK(tuner::parse_mode("deep") == PromptMode::kDeep);
  CHECK(tuner::mode_name(PromptMode::kDeep) == "deep");
  CHECK_THROWS_AS(tuner::parse_mode("prefix"), ConfigError);
}

TEST_CASE("prompt layout and validation") {
  const auto cfg = tiny_config();
  CHECK(tuner::covered_layers(4, 3) == std::vector<std::size_t>{1, 2, 3});
  CHECK_THROWS_AS(tuner::covered_layers(2, 3), ConfigError);

  auto soft = tuner::init_prompt(testing::random_tensor({5, 16}, 1), PromptMode::kSoft);
  CHECK(soft.length() == 5);
  CHECK(soft.width() == 16);
  CHECK(soft.parameters().size() == 1);
  CHECK(soft.token_prompt->requires_grad);
  CHECK_NOTHROW(soft.validate(cfg));

  const std::vector<nc::Tensor> deep_samples{testing::random_tensor({5, 16}, 2),
                                             testing::random_tensor({5, 16}, 3)};
  auto deep = tuner::init_prompt(testing::random_tensor({5, 16}, 4), PromptMode::kDeep,
                                 deep_samples, cfg.n_layers);
  CHECK(deep.deep_prompts.size() == 2);
  CHECK(deep.deep_prompts.count(1));
  CHECK(deep.deep_prompts.count(2));
  CHECK(deep.parameters().size() == 3);
  CHECK(deep.deep_prompts.at(1)->value == deep_samples[0]);
  CHECK_NOTHROW(deep.validate(cfg));

  auto gap = deep.clone();
  gap.deep_prompts.erase(2);
  gap.deep_prompts[0] = nc::make_var(testing::random_tensor({5, 16}, 5), true);
  CHECK_THROWS_AS(gap.validate(cfg), ConfigError);

  auto wrong_width = tuner::init_prompt(testing::random_tensor({5, 8}, 1), PromptMode::kSoft);
  CHECK_THROWS_AS(wrong_width.validate(cfg), ConfigError);

  auto soft_with_deep = deep.clone();
  soft_with_deep.mode = PromptMode::kSoft;
  CHECK_THROWS_AS(soft_with_deep.validate(cfg), ConfigError);
}

TEST_CASE("clone is deep") {
  auto p = tuner::init_prompt(testing::random_tensor({3, 16}, 1), PromptMode::kSoft);
  auto c = p.clone();
  CHECK(c == p);
  c.token_prompt->value[0] += 1.0;
  CHECK_FALSE(c == p);
}

TEST_CASE("prompt gradients match finite differences") {
  for (const auto& r : testing::model_gradchecks()) {
    INFO(r.name << " max rel err " << r.max_rel_err << " over " << r.coords);
    CHECK(r.ok());
  }
}

TEST_CASE("deep forward doubles the prompt inside covered blocks") {
  const auto m = frozen_model();
  const tasks::Tokenizer tok;
  std::vector<std::vector<tasks::TokenId>> seqs;
  for (const auto& ex : tasks::gen_qa_dataset(1, 3)) seqs.push_back(tasks::encode_example(tok, ex).tokens);
  const auto batch = model::TokenBatch::from_sequences(seqs);
  const std::size_t T = batch.seq_len;
  for (std::size_t k : {1u, 4u, 9u}) {
    const std::vector<nc::Tensor> ds{testing::random_tensor({k, 16}, 2), testing::random_tensor({k, 16}, 3)};
    const auto p = tuner::init_prompt(testing::random_tensor({k, 16}, 1), PromptMode::kDeep, ds, 3);
    std::vector<model::LayerWidth> seen;
    nc::Tape tape;
    const auto fr = tuner::deep_forward(tape, m, p, batch,
                                        {.on_layer = [&](const model::LayerWidth& w) { seen.push_back(w); }});
    REQUIRE(seen.size() == 3);
    CHECK(seen[0].internal == k + T);
    for (std::size_t l : {1u, 2u}) {
      CHECK(seen[l].internal == 2 * k + T);
      CHECK(seen[l].emitted == k + T);
    }
    CHECK(fr.positions == k + T);
  }
}

TEST_CASE("soft forward with truncation drops the prompt after the first block") {
  const auto m = frozen_model();
  const tasks::Tokenizer tok;
  std::vector<std::vector<tasks::TokenId>> seqs{tasks::encode_example(tok, tasks::gen_qa_dataset(2, 1)[0]).tokens};
  const auto batch = model::TokenBatch::from_sequences(seqs);
  auto p = tuner::init_prompt(testing::random_tensor({4, 16}, 1), PromptMode::kSoft);
  p.truncate_token_prompt = true;
  nc::Tape tape;
  const auto fr = tuner::soft_forward(tape, m, p, batch);
  CHECK(fr.positions == batch.seq_len);
  CHECK(fr.prefix == 0);
}

TEST_CASE("promptless evaluation") {
  const auto m = frozen_model();
  const tasks::Tokenizer tok;
  const auto val = tasks::gen_qa_dataset(3, 20);
  const auto e = tuner::evaluate(m, nullptr, tok, val);
  CHECK(e.examples == 20);
  std::size_t tokens = 0;
  for (const auto& ex : val) tokens += ex.answer.size() + 1;
  CHECK(e.tokens == tokens);
  CHECK(e.exact_match >= 0.0);
  CHECK(e.exact_match <= e.token_accuracy + 1e-12);
  CHECK(e.loss > 0.0);
  CHECK_THROWS_AS(tuner::evaluate(m, nullptr, tok, {}), ConfigError);
  auto unfrozen = model::build_model(tiny_config());
  CHECK_THROWS_AS(tuner::evaluate(unfrozen, nullptr, tok, val), ConfigError);
}

TEST_CASE("tuning leaves the base untouched and is deterministic") {
  const auto m = frozen_model();
  const auto before = m.checksum();
  const tasks::Tokenizer tok;
  const auto train = tasks::gen_qa_dataset(4, 64);
  const auto val = tasks::gen_qa_dataset(5, 16);
  const auto init = tuner::init_prompt(testing::random_tensor({4, 16}, 9, -0.05, 0.05), PromptMode::kSoft);
  const auto init_copy = init.clone();
  const auto cfg = quick_config();

  const auto r1 = tuner::tune(m, init, tok, train, val, cfg);
  CHECK(m.checksum() == before);
  CHECK(init == init_copy);
  CHECK(r1.init_snapshot == init_copy);
  CHECK(r1.steps_run == cfg.steps);
  CHECK(r1.history.front().step == 0);
  CHECK_FALSE(r1.history.front().train_loss.has_value());
  double best = r1.history.front().val_loss.value();
  for (const auto& h : r1.history)
    if (h.val_loss) best = std::min(best, *h.val_loss);
  CHECK(r1.best_val_loss == best);
  CHECK(r1.best_val_loss < *r1.history.front().val_loss);
  CHECK(tuner::evaluate(m, &r1.tuned, tok, val).loss == doctest::Approx(r1.best_val_loss).epsilon(1e-12));

  const auto r2 = tuner::tune(m, init, tok, train, val, cfg);
  CHECK(r2.tuned == r1.tuned);
  CHECK(r2.best_val_loss == r1.best_val_loss);

  auto other = cfg;
  other.seed = 5;
  CHECK_FALSE(tuner::tune(m, init, tok, train, val, other).tuned == r1.tuned);
}

TEST_CASE("deep tuning updates every prompt block") {
  const auto m = frozen_model();
  const tasks::Tokenizer tok;
  const auto train = tasks::gen_qa_dataset(4, 32);
  const auto val = tasks::gen_qa_dataset(5, 8);
  const std::vector<nc::Tensor> ds{testing::random_tensor({3, 16}, 2, -0.1, 0.1),
                                   testing::random_tensor({3, 16}, 3, -0.1, 0.1)};
  const auto init = tuner::init_prompt(testing::random_tensor({3, 16}, 1, -0.1, 0.1),
                                       PromptMode::kDeep, ds, 3);
  auto cfg = quick_config();
  cfg.steps = 10;
  cfg.eval_every = 5;
  const auto r = tuner::tune(m, init, tok, train, val, cfg);
  CHECK(r.steps_run == 10);
  CHECK(r.tuned.deep_prompts.at(1)->value != init.deep_prompts.at(1)->value);
  CHECK(r.tuned.deep_prompts.at(2)->value != init.deep_prompts.at(2)->value);
  CHECK(r.tuned.token_prompt->value != init.token_prompt->value);
}

TEST_CASE("tuning refuses an unfrozen base and bad configs") {
  auto m = model::build_model(tiny_config());
  const tasks::Tokenizer tok;
  const auto data = tasks::gen_qa_dataset(4, 8);
  const auto init = tuner::init_prompt(testing::random_tensor({2, 16}, 1), PromptMode::kSoft);
  CHECK_THROWS_AS(tuner::tune(m, init, tok, data, data, quick_config()), ConfigError);
  m.freeze();
  auto bad = quick_config();
  bad.lr = -1.0;
  CHECK_THROWS_AS(tuner::tune(m, init, tok, data, data, bad), ConfigError);
  bad = quick_config();
  bad.batch = 0;
  CHECK_THROWS_AS(tuner::tune(m, init, tok, data, data, bad), ConfigError);
}

TEST_CASE("early stopping") {
  const auto m = frozen_model();
  const tasks::Tokenizer tok;
  const auto train = tasks::gen_qa_dataset(4, 32);
  const auto val = tasks::gen_qa_dataset(5, 8);
  const auto init = tuner::init_prompt(testing::random_tensor({2, 16}, 1), PromptMode::kSoft);
  auto cfg = quick_config();
  cfg.steps = 200;
  cfg.lr = 1e-9;
  cfg.eval_every = 5;
  cfg.patience = 20;
  cfg.min_delta = 1e-3;
  const auto r = tuner::tune(m, init, tok, train, val, cfg);
  CHECK(r.stopped_early);
  CHECK(r.steps_run == 20);
}

TEST_CASE("steps to threshold") {
  const std::vector<tuner::HistoryEntry> h{{0, {}, 3.0}, {10, 2.5, 2.0}, {20, 1.0, 1.5}, {30, 1.0, 1.2}};
  CHECK(tuner::steps_to_threshold(h, 2.0) == 10u);
  CHECK(tuner::steps_to_threshold(h, 1.3) == 30u);
  CHECK(tuner::steps_to_threshold(h, 3.5) == 0u);
  CHECK_FALSE(tuner::steps_to_threshold(h, 1.0).has_value());
}

TEST_CASE("history csv and saved prompts round trip") {
  const auto m = frozen_model();
  const tasks::Tokenizer tok;
  const auto train = tasks::gen_qa_dataset(4, 16);
  const auto val = tasks::gen_qa_dataset(5, 4);
  const std::vector<nc::Tensor> ds{testing::random_tensor({2, 16}, 2), testing::random_tensor({2, 16}, 3)};
  const auto init = tuner::init_prompt(testing::random_tensor({2, 16}, 1), PromptMode::kDeep, ds, 3);
  auto cfg = quick_config();
  cfg.steps = 6;
  cfg.eval_every = 3;
  const auto r = tuner::tune(m, init, tok, train, val, cfg);

  const auto csv = temp_file("history.csv");
  tuner::write_history_csv(csv, r.history);
  std::ifstream in(csv);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "step,train_loss,val_loss");
  CHECK(first.rfind("0,,", 0) == 0);
  std::filesystem::remove(csv);

  const auto path = temp_file("prompt.ppl");
  tuner::save_tune_result(path, r);
  const auto saved = tuner::load_tune_result(path);
  CHECK(saved.init == r.init_snapshot);
  CHECK(saved.tuned == r.tuned);
  CHECK(saved.best_step == r.best_step);
  CHECK(saved.steps_run == r.steps_run);
  CHECK(saved.best_val_loss == r.best_val_loss);
  std::filesystem::remove(path);
}
