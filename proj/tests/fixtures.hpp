// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Gradient-check fixtures shared by the unit suites and the acceptance run.
#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "magnet/autodiff.hpp"
#include "magnet/gnn.hpp"
#include "magnet/grad_check.hpp"
#include "magnet/graph.hpp"

namespace magnet::testing {

inline Tensor<double> random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                    double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(rows, cols);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline BinaryMask random_mask(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                              double keep_rate = 0.6) {
  BinaryMask m(rows, cols, 0);
  std::bernoulli_distribution keep(keep_rate);
  std::uniform_int_distribution<std::size_t> pick(0, cols - 1);
  for (std::size_t j = 0; j < rows; ++j) {
    for (std::size_t i = 0; i < cols; ++i) m.set(j, i, keep(rng));
    if (m.row_count(j) == 0) m.set(j, pick(rng), true);
  }
  return m;
}

// sum(y * R) for a fixed random R, so every output entry carries a
// distinct weight into the scalar.
inline Var<double> weighted_sum(Var<double> y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum_all(mul_const(y, random_tensor(y.rows(), y.cols(), rng, 0.5, 1.5)));
}

// Every differentiable op wrapped into a scalar loss over one seeded set of
// inputs. Builders capture the fixture by reference.
struct OpFixture {
  ParameterSet<double> params;
  BinaryMask mask;
  Tensor<double> constant, pair_mask, prob, spread;
  NeighborLists adj;
  std::vector<int> labels{0, 2, 1, 1, 0};
  std::vector<std::size_t> rows{4, 0, 0, 2};

  explicit OpFixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution sign(0.5);
    Tensor<double> kinked = random_tensor(5, 4, rng, 0.2, 1.0);
    for (auto& v : kinked.data()) v = sign(rng) ? v : -v;
    params.add("a", random_tensor(5, 4, rng));
    params.add("b", random_tensor(4, 3, rng));
    params.add("c", random_tensor(5, 4, rng));
    params.add("bias", random_tensor(1, 4, rng));
    params.add("pos", random_tensor(5, 5, rng, 0.1, 1.0));
    params.add("kinked", kinked);
    params.add("logits", random_tensor(5, 3, rng, -2, 2));
    mask = random_mask(5, 3, rng);
    constant = random_tensor(5, 4, rng);
    pair_mask = Tensor<double>(5, 5, 1.0);
    for (std::size_t i = 0; i < 5; ++i) pair_mask(i, i) = 0.0;
    pair_mask(1, 3) = pair_mask(3, 1) = 0.0;
    prob = random_tensor(5, 5, rng, 0.0, 1.0);
    prob(2, 2) = 0.0;
    double total = 0.0;
    for (double v : prob.data()) total += v;
    for (auto& v : prob.data()) v /= total;
    adj.node_count = 5;
    adj.offsets = {0, 2, 3, 5, 6, 8};
    adj.neighbors = {1, 2, 0, 0, 4, 4, 2, 3};
    adj.edge_feature = {0.3, -0.2, 0.3, -0.2, 0.7, 0.1, 0.7, 0.1};
    // Column weights far apart: the softmax Jacobian scales with weight
    // differences, and near-equal weights leave only cancellation noise.
    spread = Tensor<double>(5, 3);
    for (std::size_t j = 0; j < 5; ++j) {
      for (std::size_t i = 0; i < 3; ++i) spread(j, i) = 1.0 + 4.0 * static_cast<double>(i) + 0.3 * static_cast<double>(j);
    }
  }

  std::vector<std::pair<std::string, LossBuilder>> cases() const {
    using P = ParameterSet<double>;
    using T = Tape<double>;
    return {
        {"matmul", [](T& t, const P& q) { return weighted_sum(matmul(t.bind(q, "a"), t.bind(q, "b")), 1); }},
        {"add", [](T& t, const P& q) { return weighted_sum(add(t.bind(q, "a"), t.bind(q, "c")), 2); }},
        {"add_row_bias", [](T& t, const P& q) { return weighted_sum(add_row_bias(t.bind(q, "a"), t.bind(q, "bias")), 3); }},
        {"scale", [](T& t, const P& q) { return weighted_sum(scale(t.bind(q, "a"), 1.7), 4); }},
        {"mul", [](T& t, const P& q) { return weighted_sum(mul(t.bind(q, "a"), t.bind(q, "c")), 5); }},
        {"mul_const", [this](T& t, const P& q) { return weighted_sum(mul_const(t.bind(q, "a"), constant), 6); }},
        {"relu", [](T& t, const P& q) { return weighted_sum(relu(t.bind(q, "kinked")), 7); }},
        {"mean_rows", [](T& t, const P& q) { return weighted_sum(mean_rows(t.bind(q, "a")), 8); }},
        {"concat_cols", [](T& t, const P& q) {
           std::vector<Var<double>> parts{t.bind(q, "a"), t.bind(q, "logits"), t.bind(q, "c")};
           return weighted_sum(concat_cols<double>(parts), 9);
         }},
        {"slice_cols", [](T& t, const P& q) { return weighted_sum(slice_cols(t.bind(q, "a"), 1, 2), 10); }},
        {"gather_rows", [this](T& t, const P& q) { return weighted_sum(gather_rows<double>(t.bind(q, "a"), rows), 11); }},
        {"masked_softmax", [this](T& t, const P& q) {
           return sum_all(mul_const(masked_softmax(t.bind(q, "logits"), mask), spread));
         }},
        {"attention_pool", [this](T& t, const P& q) {
           auto w = masked_softmax(t.bind(q, "logits"), mask);
           std::vector<Var<double>> parts{t.bind(q, "a"), t.bind(q, "c"), t.bind(q, "kinked")};
           return weighted_sum(attention_pool<double>(w, parts), 13);
         }},
        {"neighbor_mean", [this](T& t, const P& q) { return weighted_sum(neighbor_mean(t.bind(q, "a"), adj), 14); }},
        {"squared_euclidean_pairwise", [](T& t, const P& q) {
           return weighted_sum(squared_euclidean_pairwise(t.bind(q, "a")), 15);
         }},
        {"student_t_kernel", [](T& t, const P& q) { return weighted_sum(student_t_kernel(t.bind(q, "pos")), 16); }},
        {"masked_normalize", [this](T& t, const P& q) {
           return weighted_sum(masked_normalize(t.bind(q, "pos"), pair_mask), 17);
         }},
        {"softmax_cross_entropy_sum", [this](T& t, const P& q) {
           return softmax_cross_entropy_sum(t.bind(q, "logits"), std::span<const int>(labels));
         }},
        {"kl_divergence", [this](T& t, const P& q) {
           return kl_divergence(prob, masked_normalize(t.bind(q, "pos"), Tensor<double>(5, 5, 1.0)));
         }},
    };
  }
};

// CE + 0.1 * KL through the whole model: N=6, M=2, d=4, K=2, L=2.
inline GradCheckResult full_pipeline_grad_check(std::uint64_t seed = 11) {
  ModelSpec spec;
  spec.input_dims = {3, 2};
  spec.class_count = 3;
  spec.embed_dim = 4;
  spec.heads = 2;
  spec.sage_layers = 2;
  const auto params = init_parameters<double>(spec, seed);
  std::mt19937_64 rng(seed + 1);
  const std::vector<Tensor<double>> x{random_tensor(6, 3, rng), random_tensor(6, 2, rng)};
  const BinaryMask mask = BinaryMask::from_rows({{1, 1}, {1, 0}, {0, 1}, {1, 1}, {1, 1}, {0, 1}});
  PatientGraph path;
  path.node_count = 6;
  const double feature[] = {0.3, -0.2, 0.6, 0.1, 0.4};
  for (std::size_t k = 0; k < 5; ++k) path.edges.push_back(Edge{k, k + 1, feature[k], false});
  const auto adj = path.neighbor_lists();
  const std::vector<int> y{0, 1, 2, 1, 0, 2};
  Tensor<double> pair_mask(6, 6, 1.0);
  for (std::size_t k = 0; k < 6; ++k) pair_mask(k, k) = 0.0;
  Tensor<double> p(6, 6);
  for (std::size_t u = 0; u < 6; ++u) {
    for (std::size_t v = 0; v < 6; ++v) {
      p(u, v) = u == v ? 0.0 : 1.0 / 30.0 + 0.001 * static_cast<double>(u) - 0.001 * static_cast<double>(v);
    }
  }
  auto f = [&](Tape<double>& t, const ParameterSet<double>& q) {
    auto out = forward(t, q, spec, ModelInputs<double>{x, &mask, &adj});
    auto ce = softmax_cross_entropy_sum(out.logits, std::span<const int>(y));
    auto q_dist = masked_normalize(student_t_kernel(squared_euclidean_pairwise(out.fused)), pair_mask);
    return add(ce, scale(kl_divergence(p, q_dist), 0.1));
  };
  return grad_check(f, params);
}

}  // namespace magnet::testing
