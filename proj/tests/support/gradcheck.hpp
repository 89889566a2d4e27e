// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "promptlab/numcore/autograd.hpp"

namespace promptlab::testing {

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;

struct GradcheckResult {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t coords = 0;

  bool ok(double tol = kGradcheckTolerance) const { return coords > 0 && max_rel_err < tol; }
};

// |a - n| / max(|a|, |n|, 1e-6).
double relative_error(double analytic, double numeric);

// Compares tape gradients of `loss` against central differences for every
// coordinate of every input, or an evenly strided subset of at most
// `max_coords` per input when it is nonzero.
GradcheckResult gradcheck(std::string name, const std::vector<nc::Var>& inputs,
                          const std::function<nc::Var(nc::Tape&)>& loss,
                          std::size_t max_coords = 0, double h = kGradcheckStep);

// Uniform [lo, hi) tensor from a fixed seed.
nc::Tensor random_tensor(nc::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

// sum(x .* weights) recorded on the tape, so every output element carries a
// distinct upstream gradient.
nc::Var weighted_sum(nc::Tape& tape, const nc::Var& x, const nc::Tensor& weights);

// One check per differentiable operation, named after op_name().
std::vector<GradcheckResult> op_gradchecks();

// Prompt gradients (and, for "model", parameter gradients) of a 2-layer,
// d=16 model: soft prompt, deep prompt, and the untuned base model.
std::vector<GradcheckResult> model_gradchecks();

}  // namespace promptlab::testing
