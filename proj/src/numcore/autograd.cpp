// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/numcore/autograd.hpp"

#include "promptlab/error.hpp"

namespace promptlab::nc {

Var make_var(Tensor value, bool requires_grad) {
  auto node = std::make_shared<VarNode>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

void accumulate_grad(VarNode& node, std::span<const double> g) {
  if (!node.requires_grad) return;
  if (!node.grad) node.grad = Tensor(node.value.shape(), 0.0);
  if (g.size() != node.grad->size()) throw DimensionError("gradient size mismatch");
  auto dst = node.grad->values();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void accumulate_grad(VarNode& node, Tensor&& g) {
  if (!node.requires_grad) return;
  if (!node.grad && g.shape() == node.value.shape()) {
    node.grad = std::move(g);
    return;
  }
  accumulate_grad(node, std::span<const double>(g.values()));
}

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kScale: return "scale";
    case OpKind::kSum: return "sum";
    case OpKind::kGelu: return "gelu";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kCausalAttention: return "causal_attention";
    case OpKind::kPrependRows: return "prepend_rows";
    case OpKind::kDropLeadingRows: return "drop_leading_rows";
    case OpKind::kCrossEntropy: return "cross_entropy";
  }
  return "unknown";
}

Var Tape::emit(OpKind kind, std::vector<Var> inputs, Tensor value, BackwardFn backward) {
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in->requires_grad;
  auto out = make_var(std::move(value), needs);
  records_.push_back(Record{kind, std::move(inputs), out, needs ? std::move(backward) : nullptr});
  return out;
}

void Tape::backward(const Var& loss) {
  if (loss->value.size() != 1)
    throw DimensionError("backward needs a scalar loss, got " + shape_str(loss->value.shape()));
  if (!loss->requires_grad) return;
  loss->grad = Tensor(loss->value.shape(), 1.0);
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (!it->backward || !it->output->grad) continue;
    it->backward(*it->output->grad);
  }
}

}  // namespace promptlab::nc
