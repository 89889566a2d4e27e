// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/analysis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "promptlab/error.hpp"
#include "promptlab/kernels/kernels.hpp"
#include "promptlab/rng.hpp"

namespace promptlab::analysis {

namespace {

void require_same_width(const nc::Tensor& a, const nc::Tensor& b, std::string_view what) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
    throw DimensionError(std::string(what) + ": point widths differ (" + nc::shape_str(a.shape()) +
                         " vs " + nc::shape_str(b.shape()) + ")");
}

double distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
  return std::sqrt(s);
}

StepStats summarize(std::span<const double> steps) {
  StepStats s;
  s.steps = steps.size();
  if (steps.empty()) return s;
  double sum = 0.0;
  for (double v : steps) sum += v;
  s.mean = sum / static_cast<double>(steps.size());
  if (steps.size() > 1) {
    double ss = 0.0;
    for (double v : steps) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(steps.size() - 1));
  }
  return s;
}

std::vector<double> centroid(const nc::Tensor& x) {
  std::vector<double> c(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) c[j] += x.at(i, j);
  for (double& v : c) v /= static_cast<double>(x.rows());
  return c;
}

}  // namespace

NearestNeighbors nearest(const nc::Tensor& queries, const nc::Tensor& reference) {
  require_same_width(queries, reference, "nearest");
  NearestNeighbors nn;
  nn.distance.resize(queries.rows());
  nn.index.resize(queries.rows());
  kernels::nearest_neighbors(queries.values(), reference.values(), queries.rows(),
                             reference.rows(), queries.cols(), nn.distance, nn.index);
  return nn;
}

NearestNeighbors nearest_within(const nc::Tensor& points) {
  if (points.rank() != 2 || points.rows() < 2)
    throw ConfigError("nearest_within needs at least 2 points");
  NearestNeighbors nn;
  nn.distance.resize(points.rows());
  nn.index.resize(points.rows());
  kernels::nearest_neighbors(points.values(), points.values(), points.rows(), points.rows(),
                             points.cols(), nn.distance, nn.index, true);
  return nn;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

DivergenceReport divergence_report(const nc::Tensor& posterior, const nc::Tensor& prior,
                                   const nc::Tensor& reference) {
  if (reference.empty()) throw ConfigError("divergence_report needs a reference set");
  require_same_width(posterior, reference, "divergence_report");
  require_same_width(prior, reference, "divergence_report");
  DivergenceReport r;
  const auto post = nearest(posterior, reference);
  const auto init = nearest(prior, reference);
  r.overlap_radius = reference.rows() >= 2 ? median(nearest_within(reference).distance) : 0.0;
  std::size_t overlapping = 0;
  for (std::size_t i = 0; i < posterior.rows(); ++i) {
    DivergencePoint p;
    p.index = i;
    p.nn_index = post.index[i];
    p.nn_distance = post.distance[i];
    p.init_nn_distance = i < init.distance.size() ? init.distance[i] : 0.0;
    p.overlaps = p.nn_distance <= r.overlap_radius;
    overlapping += p.overlaps ? 1 : 0;
    r.mean_nn_distance += p.nn_distance;
    r.points.push_back(p);
  }
  for (double v : init.distance) r.init_nn_distance += v;
  r.mean_nn_distance /= static_cast<double>(posterior.rows());
  r.init_nn_distance /= static_cast<double>(prior.rows());
  r.overlap_fraction = static_cast<double>(overlapping) / static_cast<double>(posterior.rows());
  return r;
}

TrajectoryReport trajectory_dispersion(std::span<const std::vector<tasks::TokenId>> sentences,
                                       const nc::Tensor& embedding) {
  if (sentences.empty()) throw ConfigError("trajectory_dispersion needs at least one sentence");
  if (embedding.rank() != 2) throw DimensionError("embedding must be [V x d]");
  TrajectoryReport rep;
  std::vector<double> all, steps;
  for (const auto& s : sentences) {
    if (s.size() < 2) throw ConfigError("trajectory sentences need at least 2 tokens");
    steps.clear();
    for (std::size_t t = 1; t < s.size(); ++t) {
      const auto a = static_cast<std::size_t>(s[t - 1]);
      const auto b = static_cast<std::size_t>(s[t]);
      if (a >= embedding.rows() || b >= embedding.rows())
        throw DimensionError("token id outside the embedding table");
      steps.push_back(distance(embedding.row(a), embedding.row(b)));
    }
    rep.sentences.push_back(summarize(steps));
    all.insert(all.end(), steps.begin(), steps.end());
  }
  rep.aggregate = summarize(all);
  return rep;
}

StepStats random_walk_baseline(const nc::Tensor& embedding, std::size_t n_steps,
                               std::uint64_t seed, std::span<const tasks::TokenId> support) {
  if (embedding.rank() != 2) throw DimensionError("embedding must be [V x d]");
  if (n_steps == 0) throw ConfigError("random walk needs at least one step");
  std::vector<std::size_t> ids;
  if (support.empty()) {
    for (std::size_t i = 0; i < embedding.rows(); ++i) ids.push_back(i);
  } else {
    for (auto t : support) {
      if (t < 0 || static_cast<std::size_t>(t) >= embedding.rows())
        throw DimensionError("support id outside the embedding table");
      ids.push_back(static_cast<std::size_t>(t));
    }
  }
  Rng rng(derive_seed(seed, "random-walk"));
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  std::vector<double> steps;
  steps.reserve(n_steps);
  std::size_t prev = ids[pick(rng)];
  for (std::size_t i = 0; i < n_steps; ++i) {
    const std::size_t next = ids[pick(rng)];
    steps.push_back(distance(embedding.row(prev), embedding.row(next)));
    prev = next;
  }
  return summarize(steps);
}

LocalityVerdict locality_test(const StepStats& corpus, const StepStats& baseline) {
  if (corpus.steps == 0 || baseline.steps == 0)
    throw ConfigError("locality_test needs both step statistics");
  const double var = corpus.std * corpus.std / static_cast<double>(corpus.steps) +
                     baseline.std * baseline.std / static_cast<double>(baseline.steps);
  if (var == 0.0) throw NumericError("locality_test: both step distributions have zero variance");
  LocalityVerdict v;
  v.corpus_mean = corpus.mean;
  v.baseline_mean = baseline.mean;
  v.z = (corpus.mean - baseline.mean) / std::sqrt(var);
  v.lower = v.z < -2.0;
  return v;
}

ClusterSeparation cluster_separation(const nc::Tensor& a, const nc::Tensor& b) {
  require_same_width(a, b, "cluster_separation");
  if (a.rows() < 2 || b.rows() < 2)
    throw ConfigError("silhouette needs at least 2 points per cluster");
  ClusterSeparation r;
  r.n_a = a.rows();
  r.n_b = b.rows();
  const auto ca = centroid(a);
  const auto cb = centroid(b);
  r.centroid_distance = distance(ca, cb);
  double spread = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) spread += distance(a.row(i), ca);
  for (std::size_t i = 0; i < b.rows(); ++i) spread += distance(b.row(i), cb);
  r.mean_intra_spread = spread / static_cast<double>(a.rows() + b.rows());
  r.separation_ratio =
      r.mean_intra_spread > 0.0 ? r.centroid_distance / r.mean_intra_spread : 0.0;

  const std::size_t d = a.cols();
  auto side = [&](const nc::Tensor& own, const nc::Tensor& other) {
    std::vector<double> intra(own.rows()), inter(own.rows());
    kernels::distance_row_sums(own.values(), own.values(), own.rows(), own.rows(), d, intra);
    kernels::distance_row_sums(own.values(), other.values(), own.rows(), other.rows(), d, inter);
    double total = 0.0;
    for (std::size_t i = 0; i < own.rows(); ++i) {
      const double ai = intra[i] / static_cast<double>(own.rows() - 1);
      const double bi = inter[i] / static_cast<double>(other.rows());
      const double m = std::max(ai, bi);
      total += m > 0.0 ? (bi - ai) / m : 0.0;
    }
    return total;
  };
  r.silhouette = (side(a, b) + side(b, a)) / static_cast<double>(a.rows() + b.rows());
  return r;
}

ClusterSeparation cluster_separation(const model::ActivationSet& a,
                                     const model::ActivationSet& b) {
  return cluster_separation(a.vectors, b.vectors);
}

}  // namespace promptlab::analysis
