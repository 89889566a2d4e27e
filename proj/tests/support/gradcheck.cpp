// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "promptlab/model/transformer.hpp"
#include "promptlab/numcore/ops.hpp"
#include "promptlab/tasks/dataset.hpp"
#include "promptlab/tuner/prompt.hpp"

namespace promptlab::testing {

namespace {

std::vector<std::size_t> coordinates(std::size_t size, std::size_t max_coords) {
  std::vector<std::size_t> idx;
  if (max_coords == 0 || size <= max_coords) {
    for (std::size_t i = 0; i < size; ++i) idx.push_back(i);
  } else {
    for (std::size_t j = 0; j < max_coords; ++j) idx.push_back(j * size / max_coords);
  }
  return idx;
}

double eval_loss(const std::function<nc::Var(nc::Tape&)>& loss) {
  nc::Tape tape;
  return loss(tape)->value[0];
}

nc::Var leaf(nc::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return nc::make_var(random_tensor(std::move(shape), seed, lo, hi), true);
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

GradcheckResult gradcheck(std::string name, const std::vector<nc::Var>& inputs,
                          const std::function<nc::Var(nc::Tape&)>& loss, std::size_t max_coords,
                          double h) {
  GradcheckResult res;
  res.name = std::move(name);
  for (const auto& in : inputs) in->grad.reset();
  {
    nc::Tape tape;
    tape.backward(loss(tape));
  }
  for (const auto& in : inputs) {
    const nc::Tensor analytic = in->grad ? *in->grad : nc::Tensor(in->value.shape(), 0.0);
    for (std::size_t i : coordinates(in->value.size(), max_coords)) {
      const double orig = in->value[i];
      in->value[i] = orig + h;
      const double up = eval_loss(loss);
      in->value[i] = orig - h;
      const double down = eval_loss(loss);
      in->value[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      res.max_rel_err = std::max(res.max_rel_err, relative_error(analytic[i], numeric));
      ++res.coords;
    }
  }
  for (const auto& in : inputs) in->grad.reset();
  return res;
}

nc::Tensor random_tensor(nc::Shape shape, std::uint64_t seed, double lo, double hi) {
  nc::Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

nc::Var weighted_sum(nc::Tape& tape, const nc::Var& x, const nc::Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += x->value[i] * weights[i];
  return tape.emit(nc::OpKind::kSum, {x}, nc::Tensor({1}, std::vector<double>{s}),
                   [x, weights](const nc::Tensor& g) {
                     nc::Tensor gx = weights;
                     for (double& v : gx.values()) v *= g[0];
                     nc::accumulate_grad(*x, std::move(gx));
                   });
}

std::vector<GradcheckResult> op_gradchecks() {
  using nc::OpKind;
  using nc::op_name;
  std::vector<GradcheckResult> out;
  const auto name = [](OpKind k) { return std::string(op_name(k)); };

  {
    auto a = leaf({3, 4}, 1), b = leaf({4, 5}, 2);
    const auto w = random_tensor({3, 5}, 3);
    out.push_back(gradcheck(name(OpKind::kMatMul), {a, b}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::matmul(t, a, b), w);
    }));
  }
  {
    auto a = leaf({3, 4}, 4), b = leaf({3, 4}, 5);
    const auto w = random_tensor({3, 4}, 6);
    out.push_back(gradcheck(name(OpKind::kAdd), {a, b}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::add(t, a, b), w);
    }));
  }
  {
    auto a = leaf({2, 5}, 7);
    const auto w = random_tensor({2, 5}, 8);
    out.push_back(gradcheck(name(OpKind::kScale), {a}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::scale(t, a, -1.7), w);
    }));
  }
  {
    auto a = leaf({3, 3}, 9);
    out.push_back(gradcheck(name(OpKind::kSum), {a}, [&](nc::Tape& t) {
      return nc::scale(t, nc::sum(t, a), 2.5);
    }));
  }
  {
    auto a = leaf({4, 5}, 10, -3.0, 3.0);
    const auto w = random_tensor({4, 5}, 11);
    out.push_back(gradcheck(name(OpKind::kGelu), {a}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::gelu(t, a), w);
    }));
  }
  {
    auto a = leaf({3, 6}, 12, -2.0, 2.0);
    const auto w = random_tensor({3, 6}, 13);
    out.push_back(gradcheck(name(OpKind::kSoftmaxRows), {a}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::softmax_rows(t, a), w);
    }));
  }
  {
    auto x = leaf({4, 8}, 14, -2.0, 2.0), g = leaf({8}, 15, 0.5, 1.5), b = leaf({8}, 16);
    const auto w = random_tensor({4, 8}, 17);
    out.push_back(gradcheck(name(OpKind::kLayerNorm), {x, g, b}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::layer_norm(t, x, g, b), w);
    }));
  }
  {
    auto table = leaf({6, 3}, 18);
    const std::vector<std::int32_t> ids{0, 2, 2, 5, 1};
    const auto w = random_tensor({5, 3}, 19);
    out.push_back(gradcheck(name(OpKind::kGatherRows), {table}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::gather_rows(t, table, ids), w);
    }));
  }
  {
    auto q = leaf({8, 6}, 20), k = leaf({8, 6}, 21), v = leaf({8, 6}, 22);
    const auto w = random_tensor({8, 6}, 23);
    out.push_back(gradcheck(name(OpKind::kCausalAttention), {q, k, v}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::causal_attention(t, q, k, v, 2, 4, 2), w);
    }));
  }
  {
    auto p = leaf({2, 3}, 24), x = leaf({6, 3}, 25);
    const auto w = random_tensor({10, 3}, 26);
    out.push_back(gradcheck(name(OpKind::kPrependRows), {p, x}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::prepend_rows(t, p, x, 2), w);
    }));
  }
  {
    auto x = leaf({8, 3}, 27);
    const auto w = random_tensor({6, 3}, 28);
    out.push_back(gradcheck(name(OpKind::kDropLeadingRows), {x}, [&](nc::Tape& t) {
      return weighted_sum(t, nc::drop_leading_rows(t, x, 2, 1), w);
    }));
  }
  {
    auto logits = leaf({5, 7}, 29, -2.0, 2.0);
    const std::vector<std::int32_t> targets{1, 6, 0, 3, 3};
    const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1};
    out.push_back(gradcheck(name(OpKind::kCrossEntropy), {logits}, [&](nc::Tape& t) {
      return nc::cross_entropy(t, logits, targets, mask);
    }));
  }
  return out;
}

std::vector<GradcheckResult> model_gradchecks() {
  const tasks::Tokenizer tok;
  model::ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.d_ff = 32;
  cfg.vocab_size = tok.vocab_size();
  cfg.max_seq = 64;
  cfg.seed = 5;
  auto base = model::build_model(cfg);

  const tasks::Dataset data{
      {tasks::TaskId::kQa, "red box has two keys.", "red box", "two keys"},
      {tasks::TaskId::kArith, "", "17+25=", "42"},
  };
  std::vector<tasks::EncodedExample> enc;
  std::vector<std::vector<tasks::TokenId>> seqs;
  for (const auto& ex : data) {
    enc.push_back(tasks::encode_example(tok, ex));
    seqs.push_back(enc.back().tokens);
  }
  const auto batch = model::TokenBatch::from_sequences(seqs);

  const auto supervised_loss = [&](nc::Tape& t, const model::ForwardResult& fr) {
    std::vector<std::int32_t> targets(fr.batch * fr.positions, 0);
    std::vector<std::uint8_t> mask(targets.size(), 0);
    for (std::size_t i = 0; i < enc.size(); ++i)
      for (std::size_t u = enc[i].supervised_from; u < enc[i].tokens.size(); ++u) {
        const std::size_t row = i * fr.positions + fr.prefix + u - 1;
        targets[row] = enc[i].tokens[u];
        mask[row] = 1;
      }
    return nc::cross_entropy(t, fr.logits, targets, mask);
  };

  std::vector<GradcheckResult> out;
  {
    model::ModelConfig mc = cfg;
    auto m = model::build_model(mc);
    std::vector<nc::Var> params = m.trainable_parameters();
    out.push_back(gradcheck("model", params, [&](nc::Tape& t) {
      return supervised_loss(t, model::forward(t, m, batch));
    }, 24));
  }

  base.freeze();
  const std::size_t k = 4;
  for (bool truncate : {false, true}) {
    auto prompt = tuner::init_prompt(random_tensor({k, cfg.d_model}, 30, -0.5, 0.5),
                                     tuner::PromptMode::kSoft);
    prompt.truncate_token_prompt = truncate;
    out.push_back(gradcheck(truncate ? "soft-truncated" : "soft", prompt.parameters(),
                            [&](nc::Tape& t) {
                              return supervised_loss(t, tuner::soft_forward(t, base, prompt, batch));
                            }));
  }
  {
    const std::vector<nc::Tensor> deep{random_tensor({k, cfg.d_model}, 31, -0.5, 0.5),
                                       random_tensor({k, cfg.d_model}, 32, -0.5, 0.5)};
    auto prompt = tuner::init_prompt(random_tensor({k, cfg.d_model}, 33, -0.5, 0.5),
                                     tuner::PromptMode::kDeep, deep, cfg.n_layers);
    out.push_back(gradcheck("deep", prompt.parameters(), [&](nc::Tape& t) {
      return supervised_loss(t, tuner::deep_forward(t, base, prompt, batch));
    }));
  }
  return out;
}

}  // namespace promptlab::testing
