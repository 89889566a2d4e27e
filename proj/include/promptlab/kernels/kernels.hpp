// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

// Numerical hot loops. Every kernel exists twice: `serial` is the reference
// used by tests, `parallel` splits the outermost independent loop across
// OpenMP threads. Both variants share one row-range body, so each output
// element is accumulated in the same order and results are bit-identical.
// Reductions over the split axis never cross threads.
namespace promptlab::kernels {

// Attention geometry for a batch of equal-length sequences stored as
// [batch * seq_len, heads * head_dim] row-major matrices.
struct AttentionDims {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::size_t heads = 0;
  std::size_t head_dim = 0;
  std::size_t width() const { return heads * head_dim; }
};

namespace serial {

// c[m x n] = a[m x k] * b[k x n]
void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, std::size_t m, std::size_t k, std::size_t n);

// out[cols x rows] = in[rows x cols]^T
void transpose(std::span<const double> in, std::span<double> out,
               std::size_t rows, std::size_t cols);

// Causal softmax attention. `probs` receives the [batch, heads, L, L]
// attention weights (upper triangle zero) and is kept for backward.
void causal_attention_forward(std::span<const double> q, std::span<const double> k,
                              std::span<const double> v, std::span<double> out,
                              std::span<double> probs, const AttentionDims& dims);

void causal_attention_backward(std::span<const double> q, std::span<const double> k,
                               std::span<const double> v, std::span<const double> probs,
                               std::span<const double> grad_out, std::span<double> grad_q,
                               std::span<double> grad_k, std::span<double> grad_v,
                               const AttentionDims& dims);

// dist[i] = min_j ||queries[i] - refs[j]||, index[i] = argmin (lowest j on ties).
// skip_self leaves out j == i, for queries and refs holding the same set.
void nearest_neighbors(std::span<const double> queries, std::span<const double> refs,
                       std::size_t n_queries, std::size_t n_refs, std::size_t dim,
                       std::span<double> dist, std::span<std::size_t> index,
                       bool skip_self = false);

// sums[i] = sum_j ||queries[i] - refs[j]|| accumulated in ascending j.
void distance_row_sums(std::span<const double> queries, std::span<const double> refs,
                       std::size_t n_queries, std::size_t n_refs, std::size_t dim,
                       std::span<double> sums);

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, std::size_t m, std::size_t k, std::size_t n);

void transpose(std::span<const double> in, std::span<double> out,
               std::size_t rows, std::size_t cols);

void causal_attention_forward(std::span<const double> q, std::span<const double> k,
                              std::span<const double> v, std::span<double> out,
                              std::span<double> probs, const AttentionDims& dims);

void causal_attention_backward(std::span<const double> q, std::span<const double> k,
                               std::span<const double> v, std::span<const double> probs,
                               std::span<const double> grad_out, std::span<double> grad_q,
                               std::span<double> grad_k, std::span<double> grad_v,
                               const AttentionDims& dims);

void nearest_neighbors(std::span<const double> queries, std::span<const double> refs,
                       std::size_t n_queries, std::size_t n_refs, std::size_t dim,
                       std::span<double> dist, std::span<std::size_t> index,
                       bool skip_self = false);

void distance_row_sums(std::span<const double> queries, std::span<const double> refs,
                       std::size_t n_queries, std::size_t n_refs, std::size_t dim,
                       std::span<double> sums);

}  // namespace parallel

// Library code calls these; they forward to `parallel`.
using parallel::causal_attention_backward;
using parallel::causal_attention_forward;
using parallel::distance_row_sums;
using parallel::matmul;
using parallel::nearest_neighbors;
using parallel::transpose;

}  // namespace promptlab::kernels
