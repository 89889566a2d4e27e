// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS=<n> to set
// the parallel width.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "promptlab/kernels/kernels.hpp"

namespace k = promptlab::kernels;

namespace {

std::vector<double> filled(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = filled(n * n, 1), b = filled(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::parallel::matmul(a, b, c, n, n, n);
    else
      k::serial::matmul(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_AttentionForward(benchmark::State& state) {
  const k::AttentionDims dims{16, static_cast<std::size_t>(state.range(0)), 4, 16};
  const std::size_t rows = dims.batch * dims.seq_len;
  const auto q = filled(rows * dims.width(), 3), kk = filled(rows * dims.width(), 4),
             v = filled(rows * dims.width(), 5);
  std::vector<double> out(rows * dims.width());
  std::vector<double> probs(dims.batch * dims.heads * dims.seq_len * dims.seq_len);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::parallel::causal_attention_forward(q, kk, v, out, probs, dims);
    else
      k::serial::causal_attention_forward(q, kk, v, out, probs, dims);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_AttentionBackward(benchmark::State& state) {
  const k::AttentionDims dims{16, static_cast<std::size_t>(state.range(0)), 4, 16};
  const std::size_t rows = dims.batch * dims.seq_len;
  const std::size_t w = rows * dims.width();
  const auto q = filled(w, 3), kk = filled(w, 4), v = filled(w, 5), g = filled(w, 6);
  std::vector<double> out(w), gq(w), gk(w), gv(w);
  std::vector<double> probs(dims.batch * dims.heads * dims.seq_len * dims.seq_len);
  k::serial::causal_attention_forward(q, kk, v, out, probs, dims);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::parallel::causal_attention_backward(q, kk, v, probs, g, gq, gk, gv, dims);
    else
      k::serial::causal_attention_backward(q, kk, v, probs, g, gq, gk, gv, dims);
    benchmark::DoNotOptimize(gq.data());
  }
}

template <bool Parallel>
void BM_NearestNeighbors(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 64;
  const auto q = filled(n * dim, 7), r = filled(n * dim, 8);
  std::vector<double> dist(n);
  std::vector<std::size_t> idx(n);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::parallel::nearest_neighbors(q, r, n, n, dim, dist, idx);
    else
      k::serial::nearest_neighbors(q, r, n, n, dim, dist, idx);
    benchmark::DoNotOptimize(dist.data());
  }
}

}  // namespace

BENCHMARK(BM_Matmul<false>)->Name("matmul/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<true>)->Name("matmul/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_AttentionForward<false>)->Name("attention_fwd/serial")->Arg(32)->Arg(96);
BENCHMARK(BM_AttentionForward<true>)->Name("attention_fwd/parallel")->Arg(32)->Arg(96);
BENCHMARK(BM_AttentionBackward<false>)->Name("attention_bwd/serial")->Arg(32)->Arg(96);
BENCHMARK(BM_AttentionBackward<true>)->Name("attention_bwd/parallel")->Arg(32)->Arg(96);
BENCHMARK(BM_NearestNeighbors<false>)->Name("nearest/serial")->Arg(500)->Arg(2000);
BENCHMARK(BM_NearestNeighbors<true>)->Name("nearest/parallel")->Arg(500)->Arg(2000);

BENCHMARK_MAIN();
