// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/tape.hpp"

#include "parrot/error.hpp"

namespace parrot {

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  const auto v = p.tensor.values();
  Tensor copy(p.tensor.shape(), std::vector<double>(v.begin(), v.end()));
  if (mode_ == Mode::kRecord && p.updatable()) {
    nodes_.push_back(Node{std::move(copy), {}, const_cast<Parameter*>(&p), true});
  } else {
    nodes_.push_back(Node{std::move(copy), {}, nullptr, false});
  }
  bound_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Pullback pullback) {
  if (!value.all_finite()) {
    throw ContractError("non-finite value produced by forward op (shape " +
                        value.shape().str() + ")");
  }
  Record rec;
  rec.inputs.reserve(inputs.size());
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape() != this) throw ContractError("input recorded on a different tape");
    rec.inputs.push_back(v.id());
    needs = needs || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, nullptr, needs});
  rec.output = nodes_.size() - 1;
  if (needs) {
    rec.pullback = std::move(pullback);
    records_.push_back(std::move(rec));
  }
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("loss was not produced on this tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        loss.value().shape().str());
  }
  if (consumed_) {
    throw ContractError("backward already ran on this tape; record a new forward pass");
  }
  consumed_ = true;
  Node& root = nodes_[loss.id()];
  if (!root.requires_grad) return;
  root.grad.assign(1, 1.0);

  Adjoint adj;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    Node& out = nodes_[it->output];
    if (out.grad.empty()) continue;
    adj.in.clear();
    adj.din.clear();
    for (NodeId id : it->inputs) {
      Node& n = nodes_[id];
      adj.in.push_back(&n.value);
      if (n.requires_grad) {
        if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
        adj.din.emplace_back(n.grad);
      } else {
        adj.din.emplace_back();
      }
    }
    adj.out = &out.value;
    adj.dout = out.grad;
    it->pullback(adj);
  }

  for (Node& n : nodes_) {
    if (n.param == nullptr || n.grad.empty()) continue;
    std::span<double> g = n.param->tensor.grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  }
}

}  // namespace parrot
