// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace magnet {
namespace {

double evaluate(const LossBuilder& f, const ParameterSet<double>& params) {
  Tape<double> tape;
  const double v = f(tape, params).value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossBuilder& f, const ParameterSet<double>& params, double eps) {
  GradientMap<double> analytic;
  {
    Tape<double> tape;
    auto loss = f(tape, params);
    if (!std::isfinite(loss.value().item())) throw NumericError("grad_check: loss is not finite");
    analytic = tape.backward(loss);
  }

  GradCheckResult result;
  ParameterSet<double> probe = params;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    const std::string& name = probe.names()[p];
    auto it = analytic.find(name);
    Tensor<double>& x = probe.at(p);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double saved = x[i];
      x[i] = saved + eps;
      const double up = evaluate(f, probe);
      x[i] = saved - eps;
      const double down = evaluate(f, probe);
      x[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double exact = it == analytic.end() ? 0.0 : it->second[i];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-12});
      const double rel = std::abs(exact - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace magnet
