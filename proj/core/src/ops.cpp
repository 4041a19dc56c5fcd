// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "parrot/error.hpp"

namespace parrot::ops {
namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.tape();
}

void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (!(a == b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
  }
}

void require_matrix(const char* op, const Shape& s) {
  if (s.rank() > 2) throw DimensionError(std::string(op) + ": expected rank <= 2, got " + s.str());
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename Fn, typename Dfn>
Var elementwise(Var x, Fn fn, Dfn dfn) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fn(in[i]);
  const std::array<Var, 1> inputs{x};
  return tape_of(x).record(std::move(out), inputs, [dfn](const Adjoint& a) {
    const Tensor& v = *a.in[0];
    for (std::size_t i = 0; i < v.size(); ++i) a.din[0][i] += a.dout[i] * dfn(v[i]);
  });
}

}  // namespace

double silu_value(double x) { return x * sigmoid(x); }

double silu_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// 0.5 * (1 + tanh(u)) is evaluated as sigmoid(2u), which keeps full relative
// precision in the negative tail.
double gelu_value(double x) {
  const double u = kGeluSqrt2OverPi * (x + kGeluCubic * x * x * x);
  return x * sigmoid(2.0 * u);
}

double gelu_derivative(double x) {
  const double u = kGeluSqrt2OverPi * (x + kGeluCubic * x * x * x);
  const double s = sigmoid(2.0 * u);
  const double du = kGeluSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x * x);
  return s + 2.0 * x * s * (1.0 - s) * du;
}

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_matrix("matmul", A.shape());
  require_matrix("matmul", B.shape());
  const std::size_t m = A.shape().rows(), k = A.shape().cols();
  const std::size_t k2 = B.shape().rows(), n = B.shape().cols();
  if (k != k2) {
    throw DimensionError("matmul: inner dimensions disagree, " + A.shape().str() + " x " +
                         B.shape().str());
  }
  Tensor C(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) C[i * n + j] += aip * B[p * n + j];
    }
  }
  const std::array<Var, 2> inputs{a, b};
  return tape_of(a).record(std::move(C), inputs, [m, k, n](const Adjoint& adj) {
    const Tensor& A = *adj.in[0];
    const Tensor& B = *adj.in[1];
    const auto dC = adj.dout;
    if (!adj.din[0].empty()) {
      // dA = dC B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += dC[i * n + j] * B[p * n + j];
          adj.din[0][i * k + p] += acc;
        }
      }
    }
    if (!adj.din[1].empty()) {
      // dB = A^T dC
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) adj.din[1][p * n + j] += aip * dC[i * n + j];
        }
      }
    }
  });
}

Var transpose(Var a) {
  const Tensor& A = a.value();
  require_matrix("transpose", A.shape());
  const std::size_t m = A.shape().rows(), n = A.shape().cols();
  Tensor T(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) T[j * m + i] = A[i * n + j];
  }
  const std::array<Var, 1> inputs{a};
  return tape_of(a).record(std::move(T), inputs, [m, n](const Adjoint& adj) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) adj.din[0][i * n + j] += adj.dout[j * m + i];
    }
  });
}

Var add(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_same_shape("add", A.shape(), B.shape());
  Tensor C(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] + B[i];
  const std::array<Var, 2> inputs{a, b};
  return tape_of(a).record(std::move(C), inputs, [](const Adjoint& adj) {
    for (int s = 0; s < 2; ++s) {
      if (adj.din[s].empty()) continue;
      for (std::size_t i = 0; i < adj.dout.size(); ++i) adj.din[s][i] += adj.dout[i];
    }
  });
}

Var add_bias(Var x, Var bias) {
  const Tensor& X = x.value();
  const Tensor& b = bias.value();
  require_matrix("add_bias", X.shape());
  const std::size_t m = X.shape().rows(), n = X.shape().cols();
  if (b.size() != n) {
    throw DimensionError("add_bias: bias " + b.shape().str() + " does not match " +
                         X.shape().str());
  }
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) Y[i * n + j] = X[i * n + j] + b[j];
  }
  const std::array<Var, 2> inputs{x, bias};
  return tape_of(x).record(std::move(Y), inputs, [m, n](const Adjoint& adj) {
    if (!adj.din[0].empty()) {
      for (std::size_t i = 0; i < m * n; ++i) adj.din[0][i] += adj.dout[i];
    }
    if (!adj.din[1].empty()) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) adj.din[1][j] += adj.dout[i * n + j];
      }
    }
  });
}

Var scale(Var x, double factor) {
  const Tensor& X = x.value();
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) Y[i] = factor * X[i];
  const std::array<Var, 1> inputs{x};
  return tape_of(x).record(std::move(Y), inputs, [factor](const Adjoint& adj) {
    for (std::size_t i = 0; i < adj.dout.size(); ++i) adj.din[0][i] += factor * adj.dout[i];
  });
}

Var axpy(Var x, Var y, double alpha) {
  const Tensor& X = x.value();
  const Tensor& Y = y.value();
  require_same_shape("axpy", X.shape(), Y.shape());
  Tensor Z(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) Z[i] = alpha == 0.0 ? X[i] : X[i] + alpha * Y[i];
  const std::array<Var, 2> inputs{x, y};
  return tape_of(x).record(std::move(Z), inputs, [alpha](const Adjoint& adj) {
    if (!adj.din[0].empty()) {
      for (std::size_t i = 0; i < adj.dout.size(); ++i) adj.din[0][i] += adj.dout[i];
    }
    if (!adj.din[1].empty()) {
      for (std::size_t i = 0; i < adj.dout.size(); ++i) adj.din[1][i] += alpha * adj.dout[i];
    }
  });
}

Var scale_by_entry(Var x, Var s, std::size_t index) {
  const Tensor& X = x.value();
  const Tensor& S = s.value();
  if (index >= S.size()) {
    throw IndexError("scale_by_entry: index " + std::to_string(index) + " outside " +
                     S.shape().str());
  }
  const double w = S[index];
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) Y[i] = w * X[i];
  const std::array<Var, 2> inputs{x, s};
  return tape_of(x).record(std::move(Y), inputs, [index](const Adjoint& adj) {
    const Tensor& X = *adj.in[0];
    const double w = (*adj.in[1])[index];
    if (!adj.din[0].empty()) {
      for (std::size_t i = 0; i < X.size(); ++i) adj.din[0][i] += w * adj.dout[i];
    }
    if (!adj.din[1].empty()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < X.size(); ++i) acc += X[i] * adj.dout[i];
      adj.din[1][index] += acc;
    }
  });
}

Var silu(Var x) { return elementwise(x, silu_value, silu_derivative); }

Var gelu(Var x) { return elementwise(x, gelu_value, gelu_derivative); }

Var softmax_rows(Var x) {
  const Tensor& X = x.value();
  const std::size_t m = X.shape().rows(), n = X.shape().cols();
  if (n == 0) throw DimensionError("softmax over an empty row");
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = X.values().data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      Y[i * n + j] = std::exp(row[j] - mx);
      z += Y[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) Y[i * n + j] /= z;
  }
  const std::array<Var, 1> inputs{x};
  return tape_of(x).record(std::move(Y), inputs, [m, n](const Adjoint& adj) {
    const Tensor& Y = *adj.out;
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += adj.dout[i * n + j] * Y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        adj.din[0][i * n + j] += Y[i * n + j] * (adj.dout[i * n + j] - dot);
      }
    }
  });
}

Var topk_renormalize(Var p, std::size_t k) {
  const Tensor& P = p.value();
  const std::size_t n = P.size();
  if (k == 0 || k > n) {
    throw ContractError("topk_renormalize: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(n) + "]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&P](std::size_t a, std::size_t b) { return P[a] > P[b]; });
  std::vector<bool> keep(n, false);
  double mass = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    keep[order[i]] = true;
    mass += P[order[i]];
  }
  if (!(mass > 0.0)) throw ContractError("topk_renormalize: retained mass is zero");
  Tensor Q(P.shape());
  for (std::size_t i = 0; i < n; ++i) Q[i] = keep[i] ? P[i] / mass : 0.0;
  const std::array<Var, 1> inputs{p};
  return tape_of(p).record(std::move(Q), inputs, [keep, mass, n](const Adjoint& adj) {
    const Tensor& Q = *adj.out;
    // q_i = p_i / S over the kept set: dp_j = (dq_j - sum_i dq_i q_i) / S.
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i]) dot += adj.dout[i] * Q[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (keep[j]) adj.din[0][j] += (adj.dout[j] - dot) / mass;
    }
  });
}

Var gather_rows(Var table, std::span<const std::uint32_t> ids) {
  const Tensor& T = table.value();
  require_matrix("gather_rows", T.shape());
  const std::size_t v = T.shape().rows(), n = T.shape().cols();
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  std::vector<std::uint32_t> rows(ids.begin(), ids.end());
  Tensor Y(Shape{rows.size(), n});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= v) {
      throw IndexError("gather_rows: id " + std::to_string(rows[i]) + " outside table of " +
                       std::to_string(v) + " rows");
    }
    std::copy_n(T.values().data() + rows[i] * n, n, Y.values().data() + i * n);
  }
  const std::array<Var, 1> inputs{table};
  return tape_of(table).record(std::move(Y), inputs, [rows = std::move(rows), n](const Adjoint& adj) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) adj.din[0][rows[i] * n + j] += adj.dout[i * n + j];
    }
  });
}

Var mean_rows(Var x) {
  const Tensor& X = x.value();
  require_matrix("mean_rows", X.shape());
  const std::size_t m = X.shape().rows(), n = X.shape().cols();
  Tensor Y(Shape{1, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) Y[j] += X[i * n + j];
  }
  for (std::size_t j = 0; j < n; ++j) Y[j] /= static_cast<double>(m);
  const std::array<Var, 1> inputs{x};
  return tape_of(x).record(std::move(Y), inputs, [m, n](const Adjoint& adj) {
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) adj.din[0][i * n + j] += adj.dout[j] * inv;
    }
  });
}

Var slice_row(Var x, std::size_t row) {
  const Tensor& X = x.value();
  require_matrix("slice_row", X.shape());
  const std::size_t m = X.shape().rows(), n = X.shape().cols();
  if (row >= m) throw IndexError("slice_row: row " + std::to_string(row) + " of " + X.shape().str());
  Tensor Y(Shape{1, n});
  for (std::size_t j = 0; j < n; ++j) Y[j] = X[row * n + j];
  const std::array<Var, 1> inputs{x};
  return tape_of(x).record(std::move(Y), inputs, [row, n](const Adjoint& adj) {
    for (std::size_t j = 0; j < n; ++j) adj.din[0][row * n + j] += adj.dout[j];
  });
}

Var concat_cols(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape().rows() != 1 || B.shape().rows() != 1) {
    throw DimensionError("concat_cols: expected row vectors, got " + A.shape().str() + " and " +
                         B.shape().str());
  }
  const std::size_t na = A.size(), nb = B.size();
  Tensor Y(Shape{1, na + nb});
  std::copy(A.values().begin(), A.values().end(), Y.values().begin());
  std::copy(B.values().begin(), B.values().end(), Y.values().begin() + na);
  const std::array<Var, 2> inputs{a, b};
  return tape_of(a).record(std::move(Y), inputs, [na, nb](const Adjoint& adj) {
    if (!adj.din[0].empty()) {
      for (std::size_t j = 0; j < na; ++j) adj.din[0][j] += adj.dout[j];
    }
    if (!adj.din[1].empty()) {
      for (std::size_t j = 0; j < nb; ++j) adj.din[1][j] += adj.dout[na + j];
    }
  });
}

Var sum(Var x) {
  const Tensor& X = x.value();
  double s = 0.0;
  for (double v : X.values()) s += v;
  const std::array<Var, 1> inputs{x};
  return tape_of(x).record(Tensor::scalar(s), inputs, [](const Adjoint& adj) {
    for (double& g : adj.din[0]) g += adj.dout[0];
  });
}

Var cross_entropy(Var logits, std::size_t target) {
  const Tensor& Z = logits.value();
  const std::size_t n = Z.size();
  if (Z.shape().rows() != 1) {
    throw DimensionError("cross_entropy: expected one logit row, got " + Z.shape().str());
  }
  if (target >= n) {
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " outside logit width " + std::to_string(n));
  }
  const double mx = *std::max_element(Z.values().begin(), Z.values().end());
  double z = 0.0;
  for (double v : Z.values()) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  const std::array<Var, 1> inputs{logits};
  return tape_of(logits).record(
      Tensor::scalar(lse - Z[target]), inputs, [target, lse, n](const Adjoint& adj) {
        const Tensor& Z = *adj.in[0];
        const double g = adj.dout[0];
        for (std::size_t j = 0; j < n; ++j) {
          const double p = std::exp(Z[j] - lse);
          adj.din[0][j] += g * (p - (j == target ? 1.0 : 0.0));
        }
      });
}

}  // namespace parrot::ops
