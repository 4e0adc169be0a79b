// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objective: summed cross-entropy plus a KL term aligning the
// input-space pair distribution P with the embedding-space distribution Q.
#pragma once

#include <span>
#include <vector>

#include "magnet/autodiff.hpp"
#include "magnet/graph.hpp"

namespace magnet {

// P over ordered pairs (i != j) of the selected patients, local indices.
// pair_mask(i, j) is 1 when the pair shares a modality; Q is restricted to
// the same pairs.
struct SimilarityDistributions {
  std::vector<std::size_t> ids;
  Tensor<double> p;
  Tensor<double> pair_mask;
  std::size_t valid_pairs = 0;
};

// a_ij = (1 + sim(i, j)) / 2 on valid off-diagonal pairs, then P = a / sum(a).
// Throws NumericError when no pair is valid or the mass is zero.
SimilarityDistributions build_P(const SimilarityMatrix& sims, std::span<const std::size_t> ids);

// Student-t kernel on squared distances, normalized over the masked pairs.
template <typename Real>
Var<Real> build_Q(Var<Real> z, const Tensor<Real>& pair_mask);

template <typename Real>
Var<Real> ce_loss(Var<Real> logits, std::span<const int> labels);

template <typename Real>
Var<Real> kl_loss(const Tensor<Real>& p, Var<Real> q);

// ce + lambda * kl. lambda == 0 returns ce itself so the KL branch is
// unreachable. Throws ConfigError on negative or non-finite lambda.
template <typename Real>
Var<Real> total_loss(Var<Real> ce, Var<Real> kl, double lambda);

double total_loss(double ce, double kl, double lambda);

}  // namespace magnet
