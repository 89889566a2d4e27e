// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <omp.h>

#include <vector>

#include "bodies.hpp"

namespace promptlab::kernels::parallel {

namespace {

// Below this many output rows the fork/join cost dominates.
constexpr std::size_t kMinParallelRows = 32;

}  // namespace

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  // Blocks are whole register tiles so the split does not change which rows
  // take the tiled path.
  const std::size_t block = detail::kTileRows * 4;
  const auto blocks = static_cast<std::ptrdiff_t>((m + block - 1) / block);
#pragma omp parallel for schedule(static) if (m >= kMinParallelRows)
  for (std::ptrdiff_t bi = 0; bi < blocks; ++bi) {
    const auto r0 = static_cast<std::size_t>(bi) * block;
    detail::matmul_rows(a.data(), b.data(), c.data(), r0, std::min(m, r0 + block), k, n);
  }
}

void transpose(std::span<const double> in, std::span<double> out, std::size_t rows,
               std::size_t cols) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows >= kMinParallelRows)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    detail::transpose_rows(in.data(), out.data(), r, r + 1, rows, cols);
  }
}

void causal_attention_forward(std::span<const double> q, std::span<const double> k,
                              std::span<const double> v, std::span<double> out,
                              std::span<double> probs, const AttentionDims& dims) {
  const auto slices = static_cast<std::ptrdiff_t>(dims.batch * dims.heads);
#pragma omp parallel
  {
    detail::AttentionScratch scratch(dims);
#pragma omp for schedule(static)
    for (std::ptrdiff_t bh = 0; bh < slices; ++bh)
      detail::attention_forward_slice(q.data(), k.data(), v.data(), out.data(), probs.data(),
                                      dims, static_cast<std::size_t>(bh), scratch);
  }
}

void causal_attention_backward(std::span<const double> q, std::span<const double> k,
                               std::span<const double> v, std::span<const double> probs,
                               std::span<const double> grad_out, std::span<double> grad_q,
                               std::span<double> grad_k, std::span<double> grad_v,
                               const AttentionDims& dims) {
  const auto slices = static_cast<std::ptrdiff_t>(dims.batch * dims.heads);
#pragma omp parallel
  {
    detail::AttentionScratch scratch(dims);
#pragma omp for schedule(static)
    for (std::ptrdiff_t bh = 0; bh < slices; ++bh)
      detail::attention_backward_slice(q.data(), k.data(), v.data(), probs.data(),
                                       grad_out.data(), grad_q.data(), grad_k.data(),
                                       grad_v.data(), dims, static_cast<std::size_t>(bh),
                                       scratch);
  }
}

void nearest_neighbors(std::span<const double> queries, std::span<const double> refs,
                       std::size_t n_queries, std::size_t n_refs, std::size_t dim,
                       std::span<double> dist, std::span<std::size_t> index,
                       bool skip_self) {
  const auto n = static_cast<std::ptrdiff_t>(n_queries);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    detail::nearest_rows(queries.data(), refs.data(), r, r + 1, n_refs, dim, dist.data(),
                         index.data(), skip_self);
  }
}

void distance_row_sums(std::span<const double> queries, std::span<const double> refs,
                       std::size_t n_queries, std::size_t n_refs, std::size_t dim,
                       std::span<double> sums) {
  const auto n = static_cast<std::ptrdiff_t>(n_queries);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    detail::distance_sum_rows(queries.data(), refs.data(), r, r + 1, n_refs, dim, sums.data());
  }
}

}  // namespace promptlab::kernels::parallel
