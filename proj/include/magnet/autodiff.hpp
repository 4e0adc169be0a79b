// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tape-based reverse-mode automatic differentiation over dense rank-2
// tensors. A Tape records operations in execution order, so the record is
// already topologically sorted; backward() walks it once in reverse.
//
// Broadcasting is limited to the row-vector bias in add_row_bias(); any other
// shape mismatch raises DimensionError.
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "magnet/mask.hpp"
#include "magnet/tensor.hpp"

namespace magnet {

template <typename Real>
class Tape;

template <typename Real>
struct Var {
  Tape<Real>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<Real>& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Named trainable tensors in insertion order. Insertion order is also the
// serialization and optimizer order, which keeps runs reproducible.
template <typename Real>
class ParameterSet {
 public:
  void add(const std::string& name, Tensor<Real> value);
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const Tensor<Real>& get(const std::string& name) const;
  Tensor<Real>& get(const std::string& name);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  Tensor<Real>& at(std::size_t i) { return values_[i]; }
  const Tensor<Real>& at(std::size_t i) const { return values_[i]; }

  // Total number of scalar parameters.
  std::size_t scalar_count() const;

  template <typename Other>
  ParameterSet<Other> cast() const {
    ParameterSet<Other> out;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      out.add(names_[i], values_[i].template cast<Other>());
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<Real>> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gradient per registered parameter; same shape as the parameter, zeros when
// the parameter is unreachable from the loss.
template <typename Real>
using GradientMap = std::map<std::string, Tensor<Real>>;

template <typename Real>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Real> constant(Tensor<Real> value);
  Var<Real> parameter(const std::string& name, Tensor<Real> value);
  // Shorthand for parameter(name, params.get(name)).
  Var<Real> bind(const ParameterSet<Real>& params, const std::string& name);

  // Appends an operation node. `backward` runs only if some input requires
  // a gradient; it reads grad(self) and accumulates into grad(input).
  Var<Real> record(Tensor<Real> value, std::vector<std::size_t> inputs,
                   BackwardFn backward);

  const Tensor<Real>& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const std::vector<std::size_t>& inputs(std::size_t id) const {
    return nodes_[id].inputs;
  }

  // Gradient buffer of a node, zero-initialised on first access.
  Tensor<Real>& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !grads_[id].empty(); }

  // Reverse sweep from a [1x1] loss. Each node is visited at most once.
  GradientMap<Real> backward(Var<Real> loss);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::pair<std::string, std::size_t>>& parameters() const {
    return params_;
  }

 private:
  struct Node {
    Tensor<Real> value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::vector<Tensor<Real>> grads_;
  std::vector<std::pair<std::string, std::size_t>> params_;
};

template <typename Real>
const Tensor<Real>& Var<Real>::value() const {
  return tape->value(id);
}

// Compressed neighbor lists for mean aggregation. Node u's neighbors are
// neighbors[offsets[u] .. offsets[u+1]) with matching edge_feature entries.
struct NeighborLists {
  std::size_t node_count = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> neighbors;
  std::vector<double> edge_feature;
  // When false, a node without neighbors is a contract violation.
  bool allow_isolated = false;

  std::size_t degree(std::size_t u) const { return offsets[u + 1] - offsets[u]; }
};

// ---- Operations ----------------------------------------------------------

template <typename Real>
Var<Real> matmul(Var<Real> a, Var<Real> b);

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b);

// a [m x n] + bias [1 x n] broadcast over rows.
template <typename Real>
Var<Real> add_row_bias(Var<Real> a, Var<Real> bias);

template <typename Real>
Var<Real> scale(Var<Real> a, Real factor);

template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b);

// Elementwise product with a constant tensor (dropout masks, pair masks).
template <typename Real>
Var<Real> mul_const(Var<Real> a, const Tensor<Real>& c);

template <typename Real>
Var<Real> relu(Var<Real> a);

// Column means: [m x n] -> [1 x n].
template <typename Real>
Var<Real> mean_rows(Var<Real> a);

template <typename Real>
Var<Real> sum_all(Var<Real> a);

template <typename Real>
Var<Real> concat_cols(std::span<const Var<Real>> parts);

template <typename Real>
Var<Real> slice_cols(Var<Real> a, std::size_t begin, std::size_t count);

template <typename Real>
Var<Real> gather_rows(Var<Real> a, std::span<const std::size_t> rows);

// Softmax over each row restricted to entries where mask is 1. Masked
// entries of the output and of the input gradient are exactly zero.
template <typename Real>
Var<Real> masked_softmax(Var<Real> logits, const BinaryMask& mask);

// Per-row weighted sum of parts: out[j] = sum_i weights(j, i) * parts[i][j].
template <typename Real>
Var<Real> attention_pool(Var<Real> weights, std::span<const Var<Real>> parts);

// Row u of the result is Mean_{v in N(u)} [z_v || e_uv], width d + 1.
// With zero_edge_features the appended column is 0.
template <typename Real>
Var<Real> neighbor_mean(Var<Real> z, const NeighborLists& adjacency,
                        bool zero_edge_features = false);

// out(i, j) = ||z_i - z_j||^2.
template <typename Real>
Var<Real> squared_euclidean_pairwise(Var<Real> z);

// Elementwise (1 + x)^-1.
template <typename Real>
Var<Real> student_t_kernel(Var<Real> sq_dist);

// (a * m) / sum(a * m) for a constant 0/1 pair mask m.
template <typename Real>
Var<Real> masked_normalize(Var<Real> a, const Tensor<Real>& pair_mask);

// Sum over rows of -log softmax(logits)[label], computed with log-sum-exp.
template <typename Real>
Var<Real> softmax_cross_entropy_sum(Var<Real> logits,
                                    std::span<const int> labels);

// sum_{p_ij > 0} p_ij * log(p_ij / max(q_ij, floor)).
template <typename Real>
Var<Real> kl_divergence(const Tensor<Real>& p, Var<Real> q, Real floor = Real(1e-12));

}  // namespace magnet
