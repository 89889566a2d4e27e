// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "promptlab/model/activations.hpp"
#include "promptlab/numcore/tensor.hpp"
#include "promptlab/tasks/tokenizer.hpp"

namespace promptlab::analysis {

// ---- embedding collapse -------------------------------------------------

struct NearestNeighbors {
  std::vector<double> distance;
  std::vector<std::size_t> index;
};

// Exact brute-force nearest reference row for every query row.
NearestNeighbors nearest(const nc::Tensor& queries, const nc::Tensor& reference);
// Nearest other row within one set (needs at least 2 rows).
NearestNeighbors nearest_within(const nc::Tensor& points);

double median(std::vector<double> values);

struct DivergencePoint {
  std::size_t index = 0;
  std::size_t nn_index = 0;
  double nn_distance = 0.0;
  double init_nn_distance = 0.0;
  bool overlaps = false;
};

// overlap_fraction: share of posterior points whose nearest reference
// neighbour is no farther than overlap_radius, the median nearest-other
// distance inside the reference set (0 for a single reference row).
struct DivergenceReport {
  double mean_nn_distance = 0.0;
  double init_nn_distance = 0.0;
  double overlap_fraction = 0.0;
  double overlap_radius = 0.0;
  std::vector<DivergencePoint> points;
};

DivergenceReport divergence_report(const nc::Tensor& posterior, const nc::Tensor& prior,
                                   const nc::Tensor& reference);

// ---- trajectory locality ------------------------------------------------

struct StepStats {
  std::size_t steps = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single step
};

struct TrajectoryReport {
  std::vector<StepStats> sentences;
  StepStats aggregate;  // over all steps of all sentences
};

// Step = Euclidean distance between embeddings of consecutive tokens.
// Throws ConfigError for an empty input or a sentence shorter than 2.
TrajectoryReport trajectory_dispersion(std::span<const std::vector<tasks::TokenId>> sentences,
                                       const nc::Tensor& embedding);

// n_steps steps of a walk over ids drawn uniformly from `support` (every
// embedding row when empty).
StepStats random_walk_baseline(const nc::Tensor& embedding, std::size_t n_steps,
                               std::uint64_t seed, std::span<const tasks::TokenId> support = {});

struct LocalityVerdict {
  double z = 0.0;
  bool lower = false;  // z < -2
  double corpus_mean = 0.0;
  double baseline_mean = 0.0;
};

// Two-sample z on mean step length. Throws NumericError when both sides
// have zero variance.
LocalityVerdict locality_test(const StepStats& corpus, const StepStats& baseline);

// ---- cluster structure --------------------------------------------------

struct ClusterSeparation {
  double centroid_distance = 0.0;
  double mean_intra_spread = 0.0;  // mean distance to own centroid, pooled
  double separation_ratio = 0.0;   // centroid_distance / mean_intra_spread
  double silhouette = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

// Euclidean silhouette of the two-way partition {a, b} on raw vectors.
// Throws ConfigError if either set has fewer than 2 rows.
ClusterSeparation cluster_separation(const nc::Tensor& a, const nc::Tensor& b);
ClusterSeparation cluster_separation(const model::ActivationSet& a,
                                     const model::ActivationSet& b);

}  // namespace promptlab::analysis
