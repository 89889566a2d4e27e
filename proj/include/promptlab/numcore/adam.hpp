// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "promptlab/numcore/autograd.hpp"

namespace promptlab::nc {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  // Throws ConfigError for lr <= 0 or betas outside [0, 1).
  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update of `param` in place. A fresh state is sized
// on first use; afterwards it must match the parameter.
void adam_update(std::span<double> param, std::span<const double> grad, AdamState& state,
                 const AdamConfig& config);

// Adam over a fixed parameter list. Parameters without a gradient buffer are
// treated as having zero gradient.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamConfig config);

  // Applies one update and throws NumericError if any parameter becomes
  // non-finite.
  void step();
  void zero_grad();

  const AdamConfig& config() const { return config_; }
  std::span<const AdamState> states() const { return states_; }

 private:
  std::vector<Var> params_;
  std::vector<AdamState> states_;
  AdamConfig config_;
};

}  // namespace promptlab::nc
