// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>
#include <random>

#include "magnet/errors.hpp"
#include "magnet/gnn.hpp"
#include "magnet/graph.hpp"
#include "magnet/metrics.hpp"
#include "magnet/objective.hpp"
#include "test_util.hpp"

using namespace magnet;
using namespace magnet::testing;

namespace {

NeighborLists path_graph(const std::vector<double>& features) {
  PatientGraph g;
  g.node_count = features.size() + 1;
  for (std::size_t k = 0; k < features.size(); ++k) g.edges.push_back(Edge{k, k + 1, features[k], false});
  return g.neighbor_lists();
}

ModelSpec small_spec(std::vector<std::size_t> dims, std::size_t d, std::size_t heads, std::size_t layers) {
  ModelSpec spec;
  spec.input_dims = std::move(dims);
  spec.class_count = 3;
  spec.embed_dim = d;
  spec.heads = heads;
  spec.sage_layers = layers;
  return spec;
}

}  // namespace

TEST_SUITE("gnn") {

TEST_CASE("sage layer: one neighbor with identity weights") {
  Tape<double> tape;
  const auto adj = path_graph({0.0});
  const auto z = tape.constant(Tensor<double>::from_rows({{1, -3}, {2, 1}}));
  const auto eye = tape.constant(Tensor<double>::identity(2));
  const auto w_msg = tape.constant(Tensor<double>::from_rows({{1, 0}, {0, 1}, {0, 0}}));
  const auto out = sage_layer(z, adj, eye, w_msg, eye).value();
  CHECK(out == Tensor<double>::from_rows({{3, 0}, {3, 0}}));
}

TEST_CASE("sage layer: zero aggregation ignores the graph") {
  std::mt19937_64 rng(1);
  Tape<double> tape;
  const auto z = tape.constant(random_tensor(4, 3, rng));
  const auto w_root = tape.constant(random_tensor(3, 3, rng));
  const auto w_msg = tape.constant(random_tensor(4, 3, rng));
  const auto zero = tape.constant(Tensor<double>(3, 3));
  const auto a = sage_layer(z, path_graph({0.1, 0.2, 0.3}), w_root, w_msg, zero).value();
  PatientGraph star;
  star.node_count = 4;
  star.edges = {{0, 1, 0.9, false}, {0, 2, -0.4, false}, {0, 3, 0.2, false}};
  const auto b = sage_layer(z, star.neighbor_lists(), w_root, w_msg, zero).value();
  CHECK(a == b);
  CHECK(a == relu(matmul(z, w_root)).value());
  CHECK_THROWS_AS(sage_layer(z, path_graph({0.1, 0.2, 0.3}), w_root, zero, zero), DimensionError);
}

TEST_CASE("sage layer: four-node path by hand") {
  Tape<double> tape;
  const auto adj = path_graph({0.5, -0.5, 0.25});
  const auto z = tape.constant(Tensor<double>::from_rows({{1, 2}, {0, 1}, {-1, 0}, {2, -1}}));
  const auto w_root = tape.constant(Tensor<double>::identity(2));
  const auto w_msg = tape.constant(Tensor<double>::from_rows({{1, 0}, {0, 1}, {1, 1}}));
  const auto w_agg = tape.constant(Tensor<double>::from_rows({{0.5, 0}, {0, -1}}));
  const auto out = sage_layer(z, adj, w_root, w_msg, w_agg).value();
  const auto expected = Tensor<double>::from_rows({{1.25, 0.5}, {0, 0}, {0, 0.125}, {1.625, 0}});
  for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(out[k] - expected[k]) < 1e-12);

  // With edge features zeroed, node 2's pre-activation becomes [-0.5, 0].
  const auto plain = sage_layer(z, adj, w_root, w_msg, w_agg, true).value();
  CHECK(plain(2, 0) == 0.0);
  CHECK(plain(2, 1) == 0.0);
  CHECK(std::abs(plain(0, 0) - 1.0) < 1e-12);
}

TEST_CASE("sage layer: permutation equivariance") {
  std::mt19937_64 rng(2);
  const std::size_t n = 7;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  PatientGraph g;
  g.node_count = n;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if ((u * 3 + v) % 4 == 0 || v == u + 1) g.edges.push_back(Edge{u, v, 0.1 * static_cast<double>(u + v), false});
    }
  }
  PatientGraph h;
  h.node_count = n;
  for (const auto& e : g.edges) {
    h.edges.push_back(Edge{std::min(perm[e.u], perm[e.v]), std::max(perm[e.u], perm[e.v]), e.similarity, false});
  }
  const auto z0 = random_tensor(n, 3, rng);
  Tensor<double> z1(n, 3);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t c = 0; c < 3; ++c) z1(perm[u], c) = z0(u, c);
  }
  Tape<double> tape;
  const auto w_root = tape.constant(random_tensor(3, 3, rng));
  const auto w_msg = tape.constant(random_tensor(4, 3, rng));
  const auto w_agg = tape.constant(random_tensor(3, 3, rng));
  const auto a = sage_layer(tape.constant(z0), g.neighbor_lists(), w_root, w_msg, w_agg).value();
  const auto b = sage_layer(tape.constant(z1), h.neighbor_lists(), w_root, w_msg, w_agg).value();
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(a(u, c) - b(perm[u], c)) < 1e-12);
  }
}

TEST_CASE("L layers only see the L-hop neighborhood") {
  const auto spec = small_spec({3}, 4, 2, 2);
  const auto params = init_parameters<double>(spec, 3);
  std::mt19937_64 rng(4);
  std::vector<Tensor<double>> x{random_tensor(6, 3, rng)};
  const BinaryMask mask(6, 1, 1);
  const auto adj = path_graph({0.1, 0.2, 0.3, 0.4, 0.5});
  auto run = [&](const std::vector<Tensor<double>>& feats) {
    Tape<double> tape;
    auto out = forward(tape, params, spec, ModelInputs<double>{feats, &mask, &adj});
    return std::make_pair(out.logits.value(), out.fused.value());
  };
  const auto before = run(x);
  x[0](5, 0) += 3.0;
  const auto after = run(x);
  // Node 5 is three hops from node 2 and beyond.
  for (std::size_t u = 0; u <= 2; ++u) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(before.first(u, c) == after.first(u, c));
  }
  bool changed = false;
  for (std::size_t c = 0; c < 4; ++c) changed = changed || before.second(5, c) != after.second(5, c);
  CHECK(changed);
}

TEST_CASE("zero decoder gives uniform logits") {
  const auto spec = small_spec({3, 2}, 4, 2, 1);
  auto params = init_parameters<double>(spec, 5);
  params.get("dec.w2") = Tensor<double>(params.get("dec.w2").shape());
  std::mt19937_64 rng(5);
  const std::vector<Tensor<double>> x{random_tensor(5, 3, rng), random_tensor(5, 2, rng)};
  const BinaryMask mask = random_mask(5, 2, rng);
  const auto adj = path_graph({0.1, 0.2, 0.3, 0.4});
  Tape<double> tape;
  const auto logits = forward(tape, params, spec, ModelInputs<double>{x, &mask, &adj}).logits.value();
  CHECK(logits == Tensor<double>(5, 3));
  // argmax of uniform logits is class 0: accuracy equals the class-0 rate.
  const auto pred = argmax_rows(logits);
  CHECK(std::count(pred.begin(), pred.end(), 0) == 5);
}

TEST_CASE("masked features never reach the outputs") {
  const auto spec = small_spec({3, 4, 2}, 4, 2, 2);
  const auto params = init_parameters<double>(spec, 6);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    std::mt19937_64 rng(100 + trial);
    const BinaryMask mask = random_mask(8, 3, rng);
    std::vector<Tensor<double>> x{random_tensor(8, 3, rng), random_tensor(8, 4, rng), random_tensor(8, 2, rng)};
    const auto adj = path_graph({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
    auto run = [&](const std::vector<Tensor<double>>& feats) {
      Tape<double> tape;
      return forward(tape, params, spec, ModelInputs<double>{feats, &mask, &adj}).logits.value();
    };
    const auto base = run(x);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        if (mask(j, i)) continue;
        for (auto& v : x[i].row(j)) v = 1e6 * (v + 1.0);
      }
    }
    CHECK(run(x) == base);
  }
}

TEST_CASE("forward contracts") {
  const auto spec = small_spec({3}, 4, 2, 1);
  const auto params = init_parameters<double>(spec, 7);
  std::mt19937_64 rng(7);
  const std::vector<Tensor<double>> x{random_tensor(3, 3, rng)};
  const BinaryMask mask(3, 1, 1);
  Tape<double> tape;
  CHECK_THROWS_AS(forward(tape, params, spec, ModelInputs<double>{x, nullptr, nullptr}), ContractError);
  CHECK_THROWS_AS(forward(tape, params, spec, ModelInputs<double>{x, &mask, nullptr}), ContractError);
  auto no_gnn = spec;
  no_gnn.use_gnn = false;
  const auto p2 = init_parameters<double>(no_gnn, 7);
  CHECK_FALSE(p2.contains("sage0.w_root"));
  CHECK_NOTHROW(forward(tape, p2, no_gnn, ModelInputs<double>{x, &mask, nullptr}));
}

TEST_CASE("initialization") {
  const auto spec = small_spec({5, 3}, 8, 2, 2);
  const auto a = init_parameters<double>(spec, 9), b = init_parameters<double>(spec, 9);
  REQUIRE(a.names() == b.names());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.at(k) == b.at(k));
  CHECK(a.get("pmmha.w_att0") == Tensor<double>(4, 1));
  CHECK(a.get("sage1.w_msg").rows() == 9);
  CHECK(a.get("dec.w1").cols() == 4);
  const auto& w_out = a.get("pmmha.w_out");
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) CHECK(std::abs(w_out(r, c) - (r == c ? 1.0 : 0.0)) <= 0.01);
  }
  const double bound = std::sqrt(6.0 / 5.0);
  for (double v : a.get("enc0.w1").data()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("full-pipeline gradient check") {
  const auto r = full_pipeline_grad_check();
  MESSAGE("full pipeline max relative error " << r.max_relative_error << " at " << r.worst_parameter);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("float and double forward agree") {
  const auto spec = small_spec({3, 2}, 4, 2, 2);
  const auto pd = init_parameters<double>(spec, 13);
  const auto pf = pd.cast<float>();
  std::mt19937_64 rng(13);
  const std::vector<Tensor<double>> xd{random_tensor(5, 3, rng), random_tensor(5, 2, rng)};
  const std::vector<Tensor<float>> xf{xd[0].cast<float>(), xd[1].cast<float>()};
  const BinaryMask mask = random_mask(5, 2, rng);
  const auto adj = path_graph({0.1, 0.2, 0.3, 0.4});
  Tape<double> td;
  Tape<float> tf;
  const auto a = forward(td, pd, spec, ModelInputs<double>{xd, &mask, &adj}).logits.value();
  const auto b = forward(tf, pf, spec, ModelInputs<float>{xf, &mask, &adj}).logits.value();
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - static_cast<double>(b[k])) < 1e-4);
}

}  // TEST_SUITE
