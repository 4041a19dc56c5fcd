// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#include "parrot/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "parrot/error.hpp"

namespace parrot {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_diff_check(const ScalarFn& f, std::span<Parameter* const> params,
                                  double eps, Stencil stencil) {
  if (!(eps > 0.0 && eps <= 1e-2)) {
    throw ContractError("finite_diff_check: eps must lie in (0, 1e-2]");
  }
  for (Parameter* p : params) p->tensor.zero_grad();
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);
  }
  auto evaluate = [&f] {
    Tape tape;
    return f(tape).value().item();
  };

  GradCheckReport report;
  for (Parameter* p : params) {
    ParamCheck pc;
    pc.name = p->name;
    pc.frozen = p->frozen;
    if (!p->updatable()) {
      pc.skipped = true;
      report.params.push_back(pc);
      continue;
    }
    const std::vector<double> analytic = p->tensor.has_grad()
        ? std::vector<double>(p->tensor.grad_view().begin(), p->tensor.grad_view().end())
        : std::vector<double>(p->tensor.size(), 0.0);
    auto values = p->tensor.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      auto at = [&](double h) {
        values[i] = saved + h;
        return evaluate();
      };
      double numeric = 0.0;
      if (stencil == Stencil::kThreePoint) {
        numeric = (at(eps) - at(-eps)) / (2.0 * eps);
      } else {
        numeric = (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
      }
      values[i] = saved;
      const double err = relative_error(analytic[i], numeric);
      ++pc.checked;
      pc.max_rel_error = std::max(pc.max_rel_error, err);
      if (report.worst_param.empty() || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = p->name;
        report.worst_index = i;
        report.worst_analytic = analytic[i];
        report.worst_numeric = numeric;
      }
    }
    report.checked += pc.checked;
    report.params.push_back(pc);
  }
  return report;
}

}  // namespace parrot
