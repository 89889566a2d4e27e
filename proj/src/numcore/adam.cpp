// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/numcore/adam.hpp"

#include <cmath>
#include <string>

#include "promptlab/error.hpp"

namespace promptlab::nc {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive, got " + std::to_string(lr));
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

void adam_update(std::span<double> param, std::span<const double> grad, AdamState& state,
                 const AdamConfig& config) {
  config.validate();
  if (grad.size() != param.size()) throw DimensionError("Adam gradient size mismatch");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  if (state.m.size() != param.size() || state.v.size() != param.size())
    throw DimensionError("Adam state does not match parameter size");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    param[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
  }
}

Adam::Adam(std::vector<Var> params, AdamConfig config)
    : params_(std::move(params)), states_(params_.size()), config_(config) {
  config_.validate();
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    if (p.grad) {
      p.grad->check_finite("gradient");
      adam_update(p.value.values(), p.grad->values(), states_[i], config_);
    } else {
      const std::vector<double> zeros(p.value.size(), 0.0);
      adam_update(p.value.values(), zeros, states_[i], config_);
    }
    p.value.check_finite("parameter after Adam update");
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p->grad.reset();
}

}  // namespace promptlab::nc
