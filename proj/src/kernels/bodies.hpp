// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

// Row-range bodies shared by the serial and parallel kernel entry points.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "promptlab/kernels/kernels.hpp"
#include "promptlab/kernels/vmath.hpp"

namespace promptlab::kernels::detail {

// Register tile: kTileRows rows of C by kTileCols columns kept in
// accumulators across the whole k loop. Every element is still accumulated
// with one fused multiply-add per p in ascending order, so the tiled and
// edge paths agree bit for bit.
inline constexpr std::size_t kTileRows = 8;
inline constexpr std::size_t kTileCols = 16;
// Depth of one pass over b, sized so the b panel stays in L2.
inline constexpr std::size_t kBlockDepth = 256;

// Accumulates p in [p0, p1) into the tile; `resume` continues from the
// partial sums already stored in c.
#if defined(__AVX512F__)
inline void matmul_tile(const double* a, const double* b, double* c, std::size_t i0,
                        std::size_t j0, std::size_t p0, std::size_t p1, std::size_t k,
                        std::size_t n, bool resume) {
  __m512d lo[kTileRows], hi[kTileRows];
  for (std::size_t r = 0; r < kTileRows; ++r) {
    if (resume) {
      lo[r] = _mm512_loadu_pd(c + (i0 + r) * n + j0);
      hi[r] = _mm512_loadu_pd(c + (i0 + r) * n + j0 + 8);
    } else {
      lo[r] = hi[r] = _mm512_setzero_pd();
    }
  }
  const double* arow = a + i0 * k;
  for (std::size_t p = p0; p < p1; ++p) {
    const __m512d b0 = _mm512_loadu_pd(b + p * n + j0);
    const __m512d b1 = _mm512_loadu_pd(b + p * n + j0 + 8);
    for (std::size_t r = 0; r < kTileRows; ++r) {
      const __m512d ar = _mm512_set1_pd(arow[r * k + p]);
      lo[r] = _mm512_fmadd_pd(ar, b0, lo[r]);
      hi[r] = _mm512_fmadd_pd(ar, b1, hi[r]);
    }
  }
  for (std::size_t r = 0; r < kTileRows; ++r) {
    _mm512_storeu_pd(c + (i0 + r) * n + j0, lo[r]);
    _mm512_storeu_pd(c + (i0 + r) * n + j0 + 8, hi[r]);
  }
}
#else
inline void matmul_tile(const double* a, const double* b, double* c, std::size_t i0,
                        std::size_t j0, std::size_t p0, std::size_t p1, std::size_t k,
                        std::size_t n, bool resume) {
  double acc[kTileRows][kTileCols] = {};
  if (resume)
    for (std::size_t r = 0; r < kTileRows; ++r)
      for (std::size_t q = 0; q < kTileCols; ++q) acc[r][q] = c[(i0 + r) * n + j0 + q];
  for (std::size_t p = p0; p < p1; ++p) {
    const double* bp = b + p * n + j0;
    for (std::size_t r = 0; r < kTileRows; ++r) {
      const double ar = a[(i0 + r) * k + p];
      for (std::size_t q = 0; q < kTileCols; ++q) acc[r][q] = std::fma(ar, bp[q], acc[r][q]);
    }
  }
  for (std::size_t r = 0; r < kTileRows; ++r)
    for (std::size_t q = 0; q < kTileCols; ++q) c[(i0 + r) * n + j0 + q] = acc[r][q];
}
#endif

inline void matmul_edge(const double* a, const double* b, double* c, std::size_t i0,
                        std::size_t i1, std::size_t j0, std::size_t j1, std::size_t k,
                        std::size_t n) {
  for (std::size_t i = i0; i < i1; ++i) {
    double* crow = c + i * n;
    for (std::size_t j = j0; j < j1; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = j0; j < j1; ++j) crow[j] = std::fma(aip, brow[j], crow[j]);
    }
  }
}

// Rows [row_begin, row_end) of c = a * b.
inline void matmul_rows(const double* a, const double* b, double* c, std::size_t row_begin,
                        std::size_t row_end, std::size_t k, std::size_t n) {
  const std::size_t full_cols = n - n % kTileCols;
  std::size_t i = row_begin;
  const std::size_t tiled_end = row_begin + (row_end - row_begin) / kTileRows * kTileRows;
  for (std::size_t p0 = 0; p0 < k; p0 += kBlockDepth) {
    const std::size_t p1 = std::min(k, p0 + kBlockDepth);
    for (std::size_t r = row_begin; r < tiled_end; r += kTileRows)
      for (std::size_t j = 0; j < full_cols; j += kTileCols)
        matmul_tile(a, b, c, r, j, p0, p1, k, n, p0 > 0);
  }
  for (; i < tiled_end; i += kTileRows)
    if (full_cols < n) matmul_edge(a, b, c, i, i + kTileRows, full_cols, n, k, n);
  if (i < row_end) matmul_edge(a, b, c, i, row_end, 0, n, k, n);
}

inline void transpose_rows(const double* in, double* out, std::size_t row_begin,
                           std::size_t row_end, std::size_t rows, std::size_t cols) {
  for (std::size_t r = row_begin; r < row_end; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = in[r * cols + c];
}

inline double head_dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

// Per-thread buffers for one (batch, head) attention slice.
struct AttentionScratch {
  std::vector<double> kt;   // [head_dim x L] transposed keys
  std::vector<double> vt;   // [head_dim x L] transposed values
  std::vector<double> row;  // [L]

  explicit AttentionScratch(const AttentionDims& d)
      : kt(d.head_dim * d.seq_len), vt(d.head_dim * d.seq_len), row(d.seq_len) {}
};

inline void load_head_transposed(const double* x, double* xt, const AttentionDims& d,
                                 std::size_t b, std::size_t off) {
  const std::size_t L = d.seq_len;
  const std::size_t W = d.width();
  for (std::size_t j = 0; j < L; ++j) {
    const double* src = x + (b * L + j) * W + off;
    for (std::size_t c = 0; c < d.head_dim; ++c) xt[c * L + j] = src[c];
  }
}

// dst[j] = sum_c x[c] * yt[c][j] for j < count, accumulated in ascending c.
inline void dots_against(const double* x, const double* yt, std::size_t stride, std::size_t count,
                         std::size_t dim, double* dst) {
  for (std::size_t j = 0; j < count; ++j) dst[j] = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    const double xc = x[c];
    const double* yc = yt + c * stride;
    for (std::size_t j = 0; j < count; ++j) dst[j] = std::fma(xc, yc[j], dst[j]);
  }
}

// One (batch, head) slice of causal attention. HD fixes the head width at
// compile time; 0 reads it from d.
template <std::size_t HD>
void attention_forward_slice_impl(const double* q, const double* k, const double* v,
                                  double* out, double* probs, const AttentionDims& d,
                                  std::size_t bh, AttentionScratch& scratch) {
  const std::size_t hd = HD ? HD : d.head_dim;
  const std::size_t b = bh / d.heads;
  const std::size_t h = bh % d.heads;
  const std::size_t L = d.seq_len;
  const std::size_t W = d.width();
  const std::size_t off = h * hd;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  double* P = probs + bh * L * L;
  load_head_transposed(k, scratch.kt.data(), d, b, off);
  for (std::size_t i = 0; i < L; ++i) {
    const double* qi = q + (b * L + i) * W + off;
    double* prow = P + i * L;
    dots_against(qi, scratch.kt.data(), L, i + 1, hd, prow);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= i; ++j) {
      prow[j] *= scale;
      mx = std::max(mx, prow[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j <= i; ++j) prow[j] = vexp(prow[j] - mx);
    for (std::size_t j = 0; j <= i; ++j) sum += prow[j];
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j <= i; ++j) prow[j] *= inv;
    for (std::size_t j = i + 1; j < L; ++j) prow[j] = 0.0;

    double* oi = out + (b * L + i) * W + off;
    std::fill(oi, oi + hd, 0.0);
    for (std::size_t j = 0; j <= i; ++j) {
      const double pij = prow[j];
      const double* vj = v + (b * L + j) * W + off;
      for (std::size_t c = 0; c < hd; ++c) oi[c] = std::fma(pij, vj[c], oi[c]);
    }
  }
}

template <std::size_t HD>
void attention_backward_slice_impl(const double* q, const double* k, const double* v,
                                   const double* probs, const double* gout, double* gq,
                                   double* gk, double* gv, const AttentionDims& d,
                                   std::size_t bh, AttentionScratch& scratch) {
  const std::size_t b = bh / d.heads;
  const std::size_t h = bh % d.heads;
  const std::size_t L = d.seq_len;
  const std::size_t W = d.width();
  const std::size_t hd = HD ? HD : d.head_dim;
  const std::size_t off = h * hd;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const double* P = probs + bh * L * L;

  auto at = [&](const double* base, std::size_t pos) { return base + (b * L + pos) * W + off; };
  auto atw = [&](double* base, std::size_t pos) { return base + (b * L + pos) * W + off; };

  for (std::size_t i = 0; i < L; ++i) {
    std::fill(atw(gq, i), atw(gq, i) + hd, 0.0);
    std::fill(atw(gk, i), atw(gk, i) + hd, 0.0);
    std::fill(atw(gv, i), atw(gv, i) + hd, 0.0);
  }
  load_head_transposed(v, scratch.vt.data(), d, b, off);
  double* ds = scratch.row.data();
  for (std::size_t i = 0; i < L; ++i) {
    const double* prow = P + i * L;
    const double* goi = at(gout, i);
    // ds[j] <- dP_ij = dO_i . v_j
    dots_against(goi, scratch.vt.data(), L, i + 1, hd, ds);
    double dot = 0.0;
    for (std::size_t j = 0; j <= i; ++j) dot = std::fma(prow[j], ds[j], dot);
    for (std::size_t j = 0; j <= i; ++j) ds[j] = prow[j] * (ds[j] - dot) * scale;

    double* gqi = atw(gq, i);
    const double* qi = at(q, i);
    for (std::size_t j = 0; j <= i; ++j) {
      const double dsj = ds[j];
      const double pij = prow[j];
      const double* kj = at(k, j);
      double* gkj = atw(gk, j);
      double* gvj = atw(gv, j);
      for (std::size_t c = 0; c < hd; ++c) {
        gqi[c] = std::fma(dsj, kj[c], gqi[c]);
        gkj[c] = std::fma(dsj, qi[c], gkj[c]);
        gvj[c] = std::fma(pij, goi[c], gvj[c]);
      }
    }
  }
}

inline void attention_forward_slice(const double* q, const double* k, const double* v,
                                    double* out, double* probs, const AttentionDims& d,
                                    std::size_t bh, AttentionScratch& scratch) {
  switch (d.head_dim) {
    case 16: return attention_forward_slice_impl<16>(q, k, v, out, probs, d, bh, scratch);
    case 8: return attention_forward_slice_impl<8>(q, k, v, out, probs, d, bh, scratch);
    default: return attention_forward_slice_impl<0>(q, k, v, out, probs, d, bh, scratch);
  }
}

inline void attention_backward_slice(const double* q, const double* k, const double* v,
                                     const double* probs, const double* gout, double* gq,
                                     double* gk, double* gv, const AttentionDims& d,
                                     std::size_t bh, AttentionScratch& scratch) {
  switch (d.head_dim) {
    case 16:
      return attention_backward_slice_impl<16>(q, k, v, probs, gout, gq, gk, gv, d, bh, scratch);
    case 8:
      return attention_backward_slice_impl<8>(q, k, v, probs, gout, gq, gk, gv, d, bh, scratch);
    default:
      return attention_backward_slice_impl<0>(q, k, v, probs, gout, gq, gk, gv, d, bh, scratch);
  }
}

inline double euclidean(const double* x, const double* y, std::size_t dim) {
  double s = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    const double diff = x[c] - y[c];
    s = std::fma(diff, diff, s);
  }
  return std::sqrt(s);
}

inline void nearest_rows(const double* queries, const double* refs, std::size_t row_begin,
                         std::size_t row_end, std::size_t n_refs, std::size_t dim,
                         double* dist, std::size_t* index, bool skip_self) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < n_refs; ++j) {
      if (skip_self && j == i) continue;
      const double dd = euclidean(queries + i * dim, refs + j * dim, dim);
      if (dd < best) {
        best = dd;
        arg = j;
      }
    }
    dist[i] = best;
    index[i] = arg;
  }
}

inline void distance_sum_rows(const double* queries, const double* refs, std::size_t row_begin,
                              std::size_t row_end, std::size_t n_refs, std::size_t dim,
                              double* sums) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_refs; ++j) s += euclidean(queries + i * dim, refs + j * dim, dim);
    sums[i] = s;
  }
}

}  // namespace promptlab::kernels::detail
