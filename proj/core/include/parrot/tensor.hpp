// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace parrot {

// Dense shape of rank 0..3. Rank 0 is a scalar with one element.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 3;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  // Rows/cols view for rank <= 2: a vector of width n is 1 x n, a scalar 1 x 1.
  std::size_t rows() const;
  std::size_t cols() const;

  std::string str() const;

  friend bool operator==(const Shape& a, const Shape& b);

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
};

// Row-major float64 tensor with an optional gradient buffer of the same shape.
class Tensor {
 public:
  Tensor() : values_(1, 0.0) {}
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(shape); }
  static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }
  static Tensor row(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_.cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * shape_.cols() + c]; }
  double item() const;

  // Row r of a rank-2 tensor as a span.
  std::span<const double> row_span(std::size_t r) const;

  bool has_grad() const { return !grad_.empty(); }
  // Allocates a zeroed gradient on first use.
  std::span<double> grad();
  std::span<const double> grad_view() const { return grad_; }
  void zero_grad();
  void drop_grad() { grad_.clear(); }

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
};

// Named model weight. `frozen` is permanent (never updated, never gradient
// checked); `trainable` is the per-stage mask.
struct Parameter {
  std::string name;
  Tensor tensor;
  bool trainable = true;
  bool frozen = false;

  bool updatable() const { return trainable && !frozen; }
};

}  // namespace parrot
