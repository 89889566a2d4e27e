// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "promptlab/priors/gaussian.hpp"

namespace promptlab::testing {

// Fixed d=8 Gaussian with a dense, well-conditioned covariance.
priors::GaussianParams fixture_gaussian(std::uint64_t seed, double shift = 0.0);

struct PriorStats {
  std::size_t n = 0;
  // Largest |estimate - truth| / standard error over mean and covariance
  // entries of fitted-Gaussian draws.
  double mean_z = 0.0;
  double cov_z = 0.0;
  double fit_mismatch = 0.0;  // fit_gaussian vs direct moments, max abs
  // Exclusion sampler.
  double accept_at_mode = 1.0;
  double exclusion_radius_sq = 0.0;  // Mahalanobis^2 below which acceptance is 0
  double min_accepted_m = 0.0;
  double plain_ball_occupancy = 0.0;
  double exclusion_ball_occupancy = 0.0;
  double log_ratio_mismatch = 0.0;  // vs direct two-density evaluation
  // Interpolation: largest |mean - (mu1 + mu2)/2| / standard error.
  double interpolation_z = 0.0;

  bool fitted_ok() const { return mean_z < 4.0 && cov_z < 4.0 && fit_mismatch < 1e-10; }
  bool exclusion_ok() const {
    return accept_at_mode == 0.0 && exclusion_ball_occupancy < plain_ball_occupancy &&
           min_accepted_m >= exclusion_radius_sq && log_ratio_mismatch < 1e-9;
  }
  bool interpolation_ok() const { return interpolation_z < 3.0; }
};

PriorStats prior_statistics(std::size_t n, std::uint64_t seed);

}  // namespace promptlab::testing
