// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>

#include "magnet/autodiff.hpp"

namespace magnet {

// Builds a scalar loss on `tape` from the given parameters. Must be a pure
// function of `params` so it can be re-evaluated at perturbed points.
using LossBuilder =
    std::function<Var<double>(Tape<double>& tape, const ParameterSet<double>& params)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Central-difference oracle. For every scalar parameter compares the
// analytic gradient from backward() with (f(x+eps) - f(x-eps)) / 2eps and
// returns the worst |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
// Throws NumericError when f evaluates to a non-finite value.
GradCheckResult grad_check(const LossBuilder& f, const ParameterSet<double>& params,
                           double eps = 1e-5);

}  // namespace magnet
