// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/objective.hpp"

#include <cmath>

namespace magnet {

namespace {

void check_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw ConfigError("objective: lambda must be a finite non-negative number");
  }
}

}  // namespace

SimilarityDistributions build_P(const SimilarityMatrix& sims, std::span<const std::size_t> ids) {
  const std::size_t n = ids.size();
  SimilarityDistributions out;
  out.ids.assign(ids.begin(), ids.end());
  out.p = Tensor<double>(n, n);
  out.pair_mask = Tensor<double>(n, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ids[i] >= sims.size()) throw DimensionError("build_P: patient index out of range");
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !sims.valid(ids[i], ids[j])) continue;
      out.pair_mask(i, j) = 1.0;
      out.p(i, j) = 0.5 * (1.0 + sims(ids[i], ids[j]));
      total += out.p(i, j);
      ++out.valid_pairs;
    }
  }
  if (out.valid_pairs == 0) throw NumericError("build_P: no valid patient pair, P is degenerate");
  if (!(total > 0.0)) throw NumericError("build_P: zero affinity mass, P is degenerate");
  for (auto& v : out.p.data()) v /= total;
  return out;
}

template <typename Real>
Var<Real> build_Q(Var<Real> z, const Tensor<Real>& pair_mask) {
  if (pair_mask.rows() != z.rows() || pair_mask.cols() != z.rows()) {
    throw DimensionError("build_Q: pair mask must be N x N");
  }
  return masked_normalize(student_t_kernel(squared_euclidean_pairwise(z)), pair_mask);
}

template <typename Real>
Var<Real> ce_loss(Var<Real> logits, std::span<const int> labels) {
  return softmax_cross_entropy_sum(logits, labels);
}

template <typename Real>
Var<Real> kl_loss(const Tensor<Real>& p, Var<Real> q) {
  return kl_divergence(p, q);
}

template <typename Real>
Var<Real> total_loss(Var<Real> ce, Var<Real> kl, double lambda) {
  check_lambda(lambda);
  if (lambda == 0.0) return ce;
  return add(ce, scale(kl, static_cast<Real>(lambda)));
}

double total_loss(double ce, double kl, double lambda) {
  check_lambda(lambda);
  return lambda == 0.0 ? ce : ce + lambda * kl;
}

#define MAGNET_INSTANTIATE_OBJECTIVE(Real)                                    \
  template Var<Real> build_Q(Var<Real>, const Tensor<Real>&);                 \
  template Var<Real> ce_loss(Var<Real>, std::span<const int>);                \
  template Var<Real> kl_loss(const Tensor<Real>&, Var<Real>);                 \
  template Var<Real> total_loss(Var<Real>, Var<Real>, double);

MAGNET_INSTANTIATE_OBJECTIVE(float)
MAGNET_INSTANTIATE_OBJECTIVE(double)

}  // namespace magnet
