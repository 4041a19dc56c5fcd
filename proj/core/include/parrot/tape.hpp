// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <unordered_map>
#include <span>
#include <vector>

#include "parrot/tensor.hpp"

namespace parrot {

class Tape;
using NodeId = std::size_t;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  NodeId id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

// Arguments handed to a local gradient rule. `din[i]` is empty when input i
// does not need a gradient; otherwise the rule must add into it.
struct Adjoint {
  std::vector<const Tensor*> in;
  const Tensor* out = nullptr;
  std::span<const double> dout;
  std::vector<std::span<double>> din;
};

using Pullback = std::function<void(const Adjoint&)>;

// Linear record of forward operations. backward() walks the records in exact
// reverse order and then adds leaf gradients into their Parameters. A tape can
// be differentiated once; gradients accumulate in the Parameters across tapes.
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a parameter; repeated calls return the same leaf. On a
  // recording tape it requires a gradient iff the parameter is updatable; an
  // inference tape binds every parameter as a constant and never writes to it.
  Var parameter(const Parameter& p);
  Var record(Tensor value, std::span<const Var> inputs, Pullback pullback);

  void backward(Var loss);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t op_count() const { return records_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  struct Record {
    std::vector<NodeId> inputs;
    NodeId output;
    Pullback pullback;
  };

  std::deque<Node> nodes_;
  std::vector<Record> records_;
  std::unordered_map<const Parameter*, NodeId> bound_;
  Mode mode_;
  bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace parrot
