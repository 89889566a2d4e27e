// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "promptlab/error.hpp"
#include "promptlab/kernels/kernels.hpp"
#include "promptlab/kernels/vmath.hpp"

namespace promptlab::nc {

namespace {

void require_matrix(const Tensor& t, std::string_view op) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + " expects a matrix, got " + shape_str(t.shape()));
}

Tensor matmul_values(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  kernels::matmul(a.values(), b.values(), c.values(), a.rows(), a.cols(), b.cols());
  return c;
}

}  // namespace

double log_sum_exp(std::span<const double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double v : row) s += std::exp(v - mx);
  return mx + std::log(s);
}

Var matmul(Tape& tape, const Var& a, const Var& b) {
  require_matrix(a->value, "matmul");
  require_matrix(b->value, "matmul");
  if (a->value.cols() != b->value.rows())
    throw DimensionError("matmul inner extents differ: " + shape_str(a->value.shape()) + " * " +
                         shape_str(b->value.shape()));
  return tape.emit(OpKind::kMatMul, {a, b}, matmul_values(a->value, b->value),
                   [a, b](const Tensor& g) {
                     if (a->requires_grad)
                       accumulate_grad(*a, matmul_values(g, transpose(b->value)));
                     if (b->requires_grad)
                       accumulate_grad(*b, matmul_values(transpose(a->value), g));
                   });
}

Var add(Tape& tape, const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape())
    throw DimensionError("add shape mismatch: " + shape_str(a->value.shape()) + " vs " +
                         shape_str(b->value.shape()));
  Tensor out = a->value;
  auto o = out.values();
  auto bv = b->value.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return tape.emit(OpKind::kAdd, {a, b}, std::move(out), [a, b](const Tensor& g) {
    accumulate_grad(*a, g.values());
    accumulate_grad(*b, g.values());
  });
}

Var scale(Tape& tape, const Var& a, double factor) {
  Tensor out = a->value;
  for (double& v : out.values()) v *= factor;
  return tape.emit(OpKind::kScale, {a}, std::move(out), [a, factor](const Tensor& g) {
    Tensor ga = g;
    for (double& v : ga.values()) v *= factor;
    accumulate_grad(*a, ga.values());
  });
}

Var sum(Tape& tape, const Var& a) {
  double s = 0.0;
  for (double v : a->value.values()) s += v;
  return tape.emit(OpKind::kSum, {a}, Tensor({1}, std::vector<double>{s}),
                   [a](const Tensor& g) {
                     Tensor ga(a->value.shape(), g[0]);
                     accumulate_grad(*a, ga.values());
                   });
}

Var gelu(Tape& tape, const Var& a) {
  constexpr double kC = 0.044715;
  const double s2pi = std::sqrt(2.0 / std::numbers::pi);
  Tensor out = a->value;
  Tensor th(a->value.shape());
  {
    auto o = out.values();
    auto t = th.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
      const double x = o[i];
      t[i] = kernels::vtanh(s2pi * (x + kC * x * x * x));
      o[i] = 0.5 * x * (1.0 + t[i]);
    }
  }
  return tape.emit(OpKind::kGelu, {a}, std::move(out),
                   [a, s2pi, th = std::move(th)](const Tensor& g) {
                     Tensor ga(a->value.shape());
                     auto xs = a->value.values();
                     auto ts = th.values();
                     auto gv = g.values();
                     auto dst = ga.values();
                     for (std::size_t i = 0; i < xs.size(); ++i) {
                       const double x = xs[i];
                       const double t = ts[i];
                       const double dt = (1.0 - t * t) * s2pi * (1.0 + 3.0 * kC * x * x);
                       dst[i] = gv[i] * (0.5 * (1.0 + t) + 0.5 * x * dt);
                     }
                     accumulate_grad(*a, std::move(ga));
                   });
}

Var softmax_rows(Tape& tape, const Var& x) {
  Tensor out = x->value;
  const std::size_t n = out.cols();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      s += v;
    }
    for (double& v : row) v /= s;
  }
  Tensor probs = out;
  return tape.emit(OpKind::kSoftmaxRows, {x}, std::move(out),
                   [x, probs = std::move(probs), n](const Tensor& g) {
                     Tensor gx(x->value.shape());
                     for (std::size_t r = 0; r < probs.rows(); ++r) {
                       auto p = probs.row(r);
                       auto gr = g.row(r);
                       double dot = 0.0;
                       for (std::size_t j = 0; j < n; ++j) dot += gr[j] * p[j];
                       auto dst = gx.row(r);
                       for (std::size_t j = 0; j < n; ++j) dst[j] = p[j] * (gr[j] - dot);
                     }
                     accumulate_grad(*x, std::move(gx));
                   });
}

Var layer_norm(Tape& tape, const Var& x, const Var& gain, const Var& bias, double eps) {
  const std::size_t d = x->value.cols();
  if (d == 0 || gain->value.size() != d || bias->value.size() != d)
    throw DimensionError("layer_norm gain/bias must match the last extent " + std::to_string(d));
  const std::size_t rows = x->value.rows();
  Tensor out(x->value.shape());
  Tensor xhat(x->value.shape());
  std::vector<double> inv_std(rows);
  const auto gv = gain->value.values();
  const auto bv = bias->value.values();
  for (std::size_t r = 0; r < rows; ++r) {
    auto xr = x->value.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    auto hr = xhat.row(r);
    auto orow = out.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      hr[j] = (xr[j] - mean) * is;
      orow[j] = hr[j] * gv[j] + bv[j];
    }
  }
  return tape.emit(
      OpKind::kLayerNorm, {x, gain, bias}, std::move(out),
      [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), d](const Tensor& g) {
        const std::size_t rows = xhat.rows();
        const auto gv = gain->value.values();
        if (gain->requires_grad || bias->requires_grad) {
          std::vector<double> dg(d, 0.0), db(d, 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            auto gr = g.row(r);
            auto hr = xhat.row(r);
            for (std::size_t j = 0; j < d; ++j) {
              dg[j] += gr[j] * hr[j];
              db[j] += gr[j];
            }
          }
          accumulate_grad(*gain, dg);
          accumulate_grad(*bias, db);
        }
        if (!x->requires_grad) return;
        Tensor gx(x->value.shape());
        std::vector<double> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          auto gr = g.row(r);
          auto hr = xhat.row(r);
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dh[j] = gr[j] * gv[j];
            mean_dh += dh[j];
            mean_dh_h += dh[j] * hr[j];
          }
          mean_dh /= static_cast<double>(d);
          mean_dh_h /= static_cast<double>(d);
          auto dst = gx.row(r);
          for (std::size_t j = 0; j < d; ++j)
            dst[j] = inv_std[r] * (dh[j] - mean_dh - hr[j] * mean_dh_h);
        }
        accumulate_grad(*x, std::move(gx));
      });
}

Var gather_rows(Tape& tape, const Var& table, std::span<const std::int32_t> ids) {
  require_matrix(table->value, "gather_rows");
  const std::size_t n_rows = table->value.rows();
  const std::size_t d = table->value.cols();
  if (ids.empty()) throw DimensionError("gather_rows needs at least one id");
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= n_rows)
      throw DimensionError("gather_rows id " + std::to_string(ids[i]) + " out of range " +
                           std::to_string(n_rows));
    auto src = table->value.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  return tape.emit(OpKind::kGatherRows, {table}, std::move(out),
                   [table, saved = std::move(saved), d](const Tensor& g) {
                     Tensor gt(table->value.shape(), 0.0);
                     for (std::size_t i = 0; i < saved.size(); ++i) {
                       auto dst = gt.row(static_cast<std::size_t>(saved[i]));
                       auto src = g.row(i);
                       for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                     }
                     accumulate_grad(*table, std::move(gt));
                   });
}

Var causal_attention(Tape& tape, const Var& q, const Var& k, const Var& v, std::size_t batch,
                     std::size_t seq_len, std::size_t heads) {
  const Tensor& qv = q->value;
  if (qv.shape() != k->value.shape() || qv.shape() != v->value.shape())
    throw DimensionError("attention q/k/v shapes differ");
  require_matrix(qv, "causal_attention");
  if (heads == 0 || qv.cols() % heads != 0)
    throw DimensionError("attention width not divisible by heads");
  if (batch * seq_len != qv.rows())
    throw DimensionError("attention rows " + std::to_string(qv.rows()) + " != batch " +
                         std::to_string(batch) + " * seq_len " + std::to_string(seq_len));
  const kernels::AttentionDims dims{batch, seq_len, heads, qv.cols() / heads};
  Tensor out(qv.shape());
  Tensor probs({batch * heads, seq_len, seq_len});
  kernels::causal_attention_forward(qv.values(), k->value.values(), v->value.values(),
                                    out.values(), probs.values(), dims);
  return tape.emit(OpKind::kCausalAttention, {q, k, v}, std::move(out),
                   [q, k, v, probs = std::move(probs), dims](const Tensor& g) {
                     Tensor gq(q->value.shape()), gk(q->value.shape()), gv(q->value.shape());
                     kernels::causal_attention_backward(
                         q->value.values(), k->value.values(), v->value.values(), probs.values(),
                         g.values(), gq.values(), gk.values(), gv.values(), dims);
                     accumulate_grad(*q, std::move(gq));
                     accumulate_grad(*k, std::move(gk));
                     accumulate_grad(*v, std::move(gv));
                   });
}

Var prepend_rows(Tape& tape, const Var& prefix, const Var& x, std::size_t batch) {
  require_matrix(prefix->value, "prepend_rows");
  require_matrix(x->value, "prepend_rows");
  const std::size_t d = x->value.cols();
  if (prefix->value.cols() != d) throw DimensionError("prepend_rows width mismatch");
  if (batch == 0 || x->value.rows() % batch != 0)
    throw DimensionError("prepend_rows rows not divisible by batch");
  const std::size_t k = prefix->value.rows();
  const std::size_t seq = x->value.rows() / batch;
  Tensor out({batch * (k + seq), d});
  auto pv = prefix->value.values();
  auto xv = x->value.values();
  auto o = out.values();
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy(pv.begin(), pv.end(), o.begin() + static_cast<std::ptrdiff_t>(b * (k + seq) * d));
    std::copy(xv.begin() + static_cast<std::ptrdiff_t>(b * seq * d),
              xv.begin() + static_cast<std::ptrdiff_t>((b + 1) * seq * d),
              o.begin() + static_cast<std::ptrdiff_t>((b * (k + seq) + k) * d));
  }
  return tape.emit(OpKind::kPrependRows, {prefix, x}, std::move(out),
                   [prefix, x, batch, k, seq, d](const Tensor& g) {
                     auto gv = g.values();
                     if (prefix->requires_grad) {
                       std::vector<double> gp(k * d, 0.0);
                       for (std::size_t b = 0; b < batch; ++b)
                         for (std::size_t i = 0; i < k * d; ++i) gp[i] += gv[b * (k + seq) * d + i];
                       accumulate_grad(*prefix, gp);
                     }
                     if (x->requires_grad) {
                       std::vector<double> gx(batch * seq * d);
                       for (std::size_t b = 0; b < batch; ++b)
                         std::copy(gv.begin() + static_cast<std::ptrdiff_t>((b * (k + seq) + k) * d),
                                   gv.begin() + static_cast<std::ptrdiff_t>((b + 1) * (k + seq) * d),
                                   gx.begin() + static_cast<std::ptrdiff_t>(b * seq * d));
                       accumulate_grad(*x, gx);
                     }
                   });
}

Var drop_leading_rows(Tape& tape, const Var& x, std::size_t batch, std::size_t count) {
  require_matrix(x->value, "drop_leading_rows");
  if (batch == 0 || x->value.rows() % batch != 0)
    throw DimensionError("drop_leading_rows rows not divisible by batch");
  const std::size_t len = x->value.rows() / batch;
  if (count >= len) throw DimensionError("drop_leading_rows would leave no rows");
  const std::size_t d = x->value.cols();
  const std::size_t keep = len - count;
  Tensor out({batch * keep, d});
  auto xv = x->value.values();
  auto o = out.values();
  for (std::size_t b = 0; b < batch; ++b)
    std::copy(xv.begin() + static_cast<std::ptrdiff_t>((b * len + count) * d),
              xv.begin() + static_cast<std::ptrdiff_t>((b + 1) * len * d),
              o.begin() + static_cast<std::ptrdiff_t>(b * keep * d));
  return tape.emit(OpKind::kDropLeadingRows, {x}, std::move(out),
                   [x, batch, len, count, keep, d](const Tensor& g) {
                     std::vector<double> gx(batch * len * d, 0.0);
                     auto gv = g.values();
                     for (std::size_t b = 0; b < batch; ++b)
                       std::copy(gv.begin() + static_cast<std::ptrdiff_t>(b * keep * d),
                                 gv.begin() + static_cast<std::ptrdiff_t>((b + 1) * keep * d),
                                 gx.begin() + static_cast<std::ptrdiff_t>((b * len + count) * d));
                     accumulate_grad(*x, gx);
                   });
}

Var cross_entropy(Tape& tape, const Var& logits, std::span<const std::int32_t> targets,
                  std::span<const std::uint8_t> mask) {
  require_matrix(logits->value, "cross_entropy");
  const std::size_t rows = logits->value.rows();
  const std::size_t vocab = logits->value.cols();
  if (targets.size() != rows || mask.size() != rows)
    throw DimensionError("cross_entropy targets/mask must have one entry per row");
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= vocab)
      throw DimensionError("cross_entropy target " + std::to_string(targets[r]) +
                           " out of range");
    auto row = logits->value.row(r);
    total += log_sum_exp(row) - row[static_cast<std::size_t>(targets[r])];
    ++count;
  }
  if (count == 0) throw ConfigError("cross_entropy mask selects no supervised positions");
  const double loss = total / static_cast<double>(count);
  if (!std::isfinite(loss)) throw NumericError("non-finite loss " + std::to_string(loss));
  std::vector<std::int32_t> t(targets.begin(), targets.end());
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return tape.emit(OpKind::kCrossEntropy, {logits}, Tensor({1}, std::vector<double>{loss}),
                   [logits, t = std::move(t), m = std::move(m), count, vocab](const Tensor& g) {
                     Tensor gl(logits->value.shape(), 0.0);
                     const double w = g[0] / static_cast<double>(count);
                     for (std::size_t r = 0; r < t.size(); ++r) {
                       if (!m[r]) continue;
                       auto row = logits->value.row(r);
                       const double lse = log_sum_exp(row);
                       auto dst = gl.row(r);
                       for (std::size_t j = 0; j < vocab; ++j) dst[j] = w * std::exp(row[j] - lse);
                       dst[static_cast<std::size_t>(t[r])] -= w;
                     }
                     accumulate_grad(*logits, std::move(gl));
                   });
}

}  // namespace promptlab::nc
