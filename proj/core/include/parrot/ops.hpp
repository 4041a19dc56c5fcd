// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "parrot/tape.hpp"

// Differentiable operations. Every op records its local gradient rule on the
// tape of its inputs; all inputs must live on the same tape.
namespace parrot::ops {

// tanh-approximation GeLU constants.
inline constexpr double kGeluSqrt2OverPi = 0.7978845608;
inline constexpr double kGeluCubic = 0.044715;

// [m x k] x [k x n] -> [m x n]. Vectors are treated as 1 x n rows.
Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
// x [m x n] + bias [1 x n] broadcast over rows.
Var add_bias(Var x, Var bias);
Var scale(Var x, double factor);
// x + alpha * y elementwise. alpha == 0 returns x's values bit for bit.
Var axpy(Var x, Var y, double alpha);
// x * s[index], with s a vector-like tensor.
Var scale_by_entry(Var x, Var s, std::size_t index);

Var silu(Var x);
Var gelu(Var x);

// Row-wise softmax with max subtraction.
Var softmax_rows(Var x);
// Keep the k largest entries of a probability row, zero the rest and
// renormalize. Ties keep the lower index.
Var topk_renormalize(Var p, std::size_t k);

// Rows `ids` of a [V x n] table -> [len(ids) x n]; gradients scatter-add.
Var gather_rows(Var table, std::span<const std::uint32_t> ids);

// [m x n] -> [1 x n]
Var mean_rows(Var x);
Var slice_row(Var x, std::size_t row);
// [1 x a], [1 x b] -> [1 x (a+b)]
Var concat_cols(Var a, Var b);
Var sum(Var x);

// Softmax cross-entropy of one logit row against a class index. Scalar result.
Var cross_entropy(Var logits, std::size_t target);

// x W + b, applied row-wise.
inline Var linear(Var x, Var weight, Var bias) { return add_bias(matmul(x, weight), bias); }

// Scalar helpers shared with the gradient tests.
double gelu_value(double x);
double gelu_derivative(double x);
double silu_value(double x);
double silu_derivative(double x);

}  // namespace parrot::ops
