// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "parrot/tape.hpp"

namespace parrot {

// Builds a scalar on the given tape, reading parameters through Tape::parameter.
using ScalarFn = std::function<Var(Tape&)>;

struct ParamCheck {
  std::string name;
  std::size_t checked = 0;     // elements compared
  double max_rel_error = 0.0;  // 0 when skipped
  bool skipped = false;        // frozen or masked out for the current stage
  bool frozen = false;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  std::vector<ParamCheck> params;
};

// |a - n| / max(|a|, |n|, 1e-12).
double relative_error(double analytic, double numeric);

// Compares tape gradients of `f` with central differences
// (f(w + eps) - f(w - eps)) / 2 eps for every element of every updatable
// parameter. Overwrites (zeroes, then fills) the parameters' gradients and
// restores every perturbed value exactly. eps must lie in (0, 1e-2].
// kFivePoint is the fourth-order central stencil
// (-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h. It tolerates a larger h,
// which keeps cancellation noise below tiny gradients.
enum class Stencil { kThreePoint, kFivePoint };

GradCheckReport finite_diff_check(const ScalarFn& f, std::span<Parameter* const> params,
                                  double eps, Stencil stencil = Stencil::kThreePoint);

}  // namespace parrot
