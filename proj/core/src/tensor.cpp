// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parrot/error.hpp"

namespace parrot {

Shape::Shape(std::initializer_list<std::size_t> dims) {
  if (dims.size() > kMaxRank) {
    throw DimensionError("tensor rank " + std::to_string(dims.size()) + " exceeds 3");
  }
  rank_ = dims.size();
  std::copy(dims.begin(), dims.end(), dims_.begin());
}

std::size_t Shape::dim(std::size_t axis) const {
  if (axis >= rank_) throw DimensionError("axis out of range for shape " + str());
  return dims_[axis];
}

std::size_t Shape::numel() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::size_t Shape::rows() const {
  switch (rank_) {
    case 0:
    case 1:
      return 1;
    case 2:
      return dims_[0];
    default:
      return dims_[0] * dims_[1];
  }
}

std::size_t Shape::cols() const { return rank_ == 0 ? 1 : dims_[rank_ - 1]; }

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) os << 'x';
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

bool operator==(const Shape& a, const Shape& b) {
  if (a.rank_ != b.rank_) return false;
  for (std::size_t i = 0; i < a.rank_; ++i) {
    if (a.dims_[i] != b.dims_[i]) return false;
  }
  return true;
}

Tensor::Tensor(Shape shape) : shape_(shape), values_(shape.numel(), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.numel()) {
    throw DimensionError("value count " + std::to_string(values_.size()) +
                         " does not match shape " + shape_.str());
  }
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{1, n}, std::move(values));
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ContractError("item() on tensor of shape " + shape_.str());
  }
  return values_[0];
}

std::span<const double> Tensor::row_span(std::size_t r) const {
  const std::size_t c = shape_.cols();
  return std::span<const double>(values_).subspan(r * c, c);
}

std::span<double> Tensor::grad() {
  if (grad_.empty()) grad_.assign(values_.size(), 0.0);
  return grad_;
}

void Tensor::zero_grad() {
  if (!grad_.empty()) std::fill(grad_.begin(), grad_.end(), 0.0);
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace parrot
