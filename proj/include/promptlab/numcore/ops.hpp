// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "promptlab/numcore/autograd.hpp"

// Differentiable operations. Tensors of rank > 2 are treated as
// [prod(leading extents), last extent] matrices.
namespace promptlab::nc {

inline constexpr double kLayerNormEps = 1e-5;

// [m x k] * [k x n]. dA = dC * B^T, dB = A^T * dC.
Var matmul(Tape& tape, const Var& a, const Var& b);

// Elementwise sum of equal shapes.
Var add(Tape& tape, const Var& a, const Var& b);

Var scale(Tape& tape, const Var& a, double factor);

// Scalar sum over all elements, in index order.
Var sum(Tape& tape, const Var& a);

// tanh-approximated GELU.
Var gelu(Tape& tape, const Var& a);

// Max-subtracted softmax over the last axis.
Var softmax_rows(Tape& tape, const Var& x);

// Normalizes the last axis to zero mean / unit variance, then applies
// gain and bias. The variance is the population variance plus eps.
Var layer_norm(Tape& tape, const Var& x, const Var& gain, const Var& bias,
               double eps = kLayerNormEps);

// out[i] = table[ids[i]]. Backward scatter-adds in ascending i.
Var gather_rows(Tape& tape, const Var& table, std::span<const std::int32_t> ids);

// Multi-head causal self-attention over `batch` sequences of `seq_len`
// rows each. q, k, v are [batch * seq_len, heads * head_dim].
Var causal_attention(Tape& tape, const Var& q, const Var& k, const Var& v, std::size_t batch,
                     std::size_t seq_len, std::size_t heads);

// Places the same [k x d] prefix in front of each of the `batch` row blocks
// of x. Output is [batch * (k + L), d] for x of [batch * L, d].
Var prepend_rows(Tape& tape, const Var& prefix, const Var& x, std::size_t batch);

// Removes the first `count` rows of each of the `batch` row blocks.
Var drop_leading_rows(Tape& tape, const Var& x, std::size_t batch, std::size_t count);

// Mean token negative log-likelihood over rows with mask != 0. Throws
// ConfigError if the mask selects nothing and NumericError on a
// non-finite loss.
Var cross_entropy(Tape& tape, const Var& logits, std::span<const std::int32_t> targets,
                  std::span<const std::uint8_t> mask);

// Row-wise log-sum-exp, used by cross_entropy and evaluation.
double log_sum_exp(std::span<const double> row);

}  // namespace promptlab::nc
