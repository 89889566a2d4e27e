// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "promptlab/numcore/tensor.hpp"

namespace promptlab::priors {

// Multivariate normal with a cached lower Cholesky factor of
// sigma + jitter * I.
struct GaussianParams {
  nc::Tensor mu;     // [d]
  nc::Tensor sigma;  // [d x d]
  nc::Tensor chol;   // [d x d], lower triangular
  double jitter = 0.0;

  std::size_t dim() const { return mu.size(); }
};

inline constexpr double kBaseJitter = 1e-8;
inline constexpr unsigned kMaxJitterSteps = 20;

// Factors sigma, retrying with jitter kBaseJitter * s * 2^j for
// j = 0, 1, ..., where s is the mean absolute diagonal, when it is not
// positive definite. An all-zero sigma gets a zero factor. Throws
// NumericError when every retry fails.
GaussianParams make_gaussian(nc::Tensor mu, nc::Tensor sigma);

// mu = mean of the rows, sigma = (1/N) sum (x - mu)(x - mu)^T.
GaussianParams fit_gaussian(const nc::Tensor& points);

// (x - mu)^T (sigma + jitter I)^-1 (x - mu). Throws NumericError for a
// zero factor.
double mahalanobis_sq(const GaussianParams& g, std::span<const double> x);

// Normalized log density under N(mu, scale * (sigma + jitter I)).
double log_density(const GaussianParams& g, std::span<const double> x, double scale = 1.0);

}  // namespace promptlab::priors
