// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "promptlab/numcore/tensor.hpp"

namespace promptlab::analysis {

struct PcaModel {
  nc::Tensor mean;        // [d]
  nc::Tensor components;  // [q x d], orthonormal rows
  std::vector<double> explained_variance;  // non-increasing, >= 0
  double total_variance = 0.0;             // trace of the covariance

  std::size_t dim() const { return mean.size(); }
  std::size_t n_components() const { return explained_variance.size(); }
};

// Eigendecomposition of the (1/M) covariance of `points` [M x d]. Each
// component's first nonzero coordinate is positive. Throws ConfigError
// unless M >= 2 and 1 <= q <= min(M, d).
PcaModel pca_fit(const nc::Tensor& points, std::size_t q);

// (x - mean) * components^T, [M x q].
nc::Tensor project(const nc::Tensor& points, const PcaModel& pca);

}  // namespace promptlab::analysis
