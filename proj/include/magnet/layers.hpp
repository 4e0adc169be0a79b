// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>
#include <string>

#include "magnet/autodiff.hpp"

namespace magnet {

// Inverted dropout. Identity when the rate is 0 or no RNG is supplied
// (evaluation).
template <typename Real>
class Dropout {
 public:
  Dropout(double rate, std::mt19937_64* rng) : rate_(rate), rng_(rng) {}

  bool active() const { return rng_ != nullptr && rate_ > 0.0; }

  Var<Real> operator()(Var<Real> x) const {
    if (!active()) return x;
    Tensor<Real> keep(x.shape());
    std::bernoulli_distribution survive(1.0 - rate_);
    const Real scale = Real(1) / static_cast<Real>(1.0 - rate_);
    for (auto& v : keep.data()) v = survive(*rng_) ? scale : Real(0);
    return mul_const(x, keep);
  }

 private:
  double rate_;
  std::mt19937_64* rng_;
};

// x * W (+ b), with W and b looked up as "<prefix>.w" / "<prefix>.b".
template <typename Real>
Var<Real> linear(Tape<Real>& tape, const ParameterSet<Real>& params, const std::string& weight,
                 Var<Real> x, const std::string& bias = {}) {
  Var<Real> y = matmul(x, tape.bind(params, weight));
  if (!bias.empty()) y = add_row_bias(y, tape.bind(params, bias));
  return y;
}

// He-style uniform fan-in initialisation: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
template <typename Real>
Tensor<Real> he_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<Real> w(fan_in, fan_out);
  for (auto& v : w.data()) v = static_cast<Real>(dist(rng));
  return w;
}

}  // namespace magnet
