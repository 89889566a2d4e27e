// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "promptlab/numcore/tensor.hpp"

namespace promptlab::nc {

// A tensor participating in a computation. Leaves (parameters, inputs) are
// created with make_var; interior values come out of ops recorded on a Tape.
// A node whose requires_grad flag is false never gets a grad buffer.
struct VarNode {
  Tensor value;
  std::optional<Tensor> grad;
  bool requires_grad = false;
};

using Var = std::shared_ptr<VarNode>;

Var make_var(Tensor value, bool requires_grad = false);

// Adds `g` into node.grad, allocating it on first use. No-op for nodes that
// do not require gradients.
void accumulate_grad(VarNode& node, std::span<const double> g);
void accumulate_grad(VarNode& node, Tensor&& g);

enum class OpKind : std::uint8_t {
  kMatMul,
  kAdd,
  kScale,
  kSum,
  kGelu,
  kSoftmaxRows,
  kLayerNorm,
  kGatherRows,
  kCausalAttention,
  kPrependRows,
  kDropLeadingRows,
  kCrossEntropy,
};

std::string_view op_name(OpKind kind);

// Per-forward record of operations. Backward walks the records in exact
// reverse order; the tape is meant to be discarded afterwards.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& grad_out)>;

  struct Record {
    OpKind kind;
    std::vector<Var> inputs;
    Var output;
    BackwardFn backward;
  };

  // Registers an op output. The output requires grad iff any input does;
  // the backward closure only runs for outputs that received a gradient.
  Var emit(OpKind kind, std::vector<Var> inputs, Tensor value, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and propagates. Throws DimensionError unless
  // loss holds exactly one element.
  void backward(const Var& loss);

  std::span<const Record> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  void clear() { records_.clear(); }

 private:
  std::vector<Record> records_;
};

}  // namespace promptlab::nc
