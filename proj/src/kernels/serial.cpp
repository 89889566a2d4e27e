// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "bodies.hpp"

namespace promptlab::kernels::serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  detail::matmul_rows(a.data(), b.data(), c.data(), 0, m, k, n);
}

void transpose(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t cols) {
  detail::transpose_rows(in.data(), out.data(), 0, rows, rows, cols);
}

void causal_attention_forward(std::span<const double> q, std::span<const double> k,
                              std::span<const double> v, std::span<double> out,
                              std::span<double> probs, const AttentionDims& dims) {
  detail::AttentionScratch scratch(dims);
  for (std::size_t bh = 0; bh < dims.batch * dims.heads; ++bh)
    detail::attention_forward_slice(q.data(), k.data(), v.data(), out.data(), probs.data(), dims,
                                    bh, scratch);
}

void causal_attention_backward(std::span<const double> q, std::span<const double> k,
                               std::span<const double> v, std::span<const double> probs,
                               std::span<const double> grad_out, std::span<double> grad_q,
                               std::span<double> grad_k, std::span<double> grad_v,
                               const AttentionDims& dims) {
  detail::AttentionScratch scratch(dims);
  for (std::size_t bh = 0; bh < dims.batch * dims.heads; ++bh)
    detail::attention_backward_slice(q.data(), k.data(), v.data(), probs.data(), grad_out.data(),
                                     grad_q.data(), grad_k.data(), grad_v.data(), dims, bh,
                                     scratch);
}

void nearest_neighbors(std::span<const double> queries, std::span<const double> refs,
                       std::size_t n_queries, std::size_t n_refs, std::size_t dim,
                       std::span<double> dist, std::span<std::size_t> index,
                       bool skip_self) {
  detail::nearest_rows(queries.data(), refs.data(), 0, n_queries, n_refs, dim, dist.data(),
                       index.data(), skip_self);
}

void distance_row_sums(std::span<const double> queries, std::span<const double> refs,
                       std::size_t n_queries, std::size_t n_refs, std::size_t dim,
                       std::span<double> sums) {
  detail::distance_sum_rows(queries.data(), refs.data(), 0, n_queries, n_refs, dim, sums.data());
}

}  // namespace promptlab::kernels::serial
