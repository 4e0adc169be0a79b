// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <random>

#include "magnet/errors.hpp"
#include "test_util.hpp"

using namespace magnet;
using namespace magnet::testing;

TEST_SUITE("numerics") {

TEST_CASE("tensor shape contract") {
  CHECK_THROWS_AS(Tensor<double>(Shape{2, 3}, std::vector<double>(5)), DimensionError);
  Tensor<double> t(2, 3, 1.5);
  CHECK(t.size() == 6);
  CHECK(t(1, 2) == 1.5);
  CHECK_THROWS_AS(t.item(), ContractError);
  t(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(t.require_finite("t"), NumericError);
}

TEST_CASE("matmul values and shape errors") {
  Tape<double> tape;
  auto eye = tape.constant(Tensor<double>::from_rows({{1, 0}, {0, 1}}));
  auto col = tape.constant(Tensor<double>::from_rows({{3}, {4}}));
  auto y = matmul(eye, col);
  CHECK(y.value() == Tensor<double>::from_rows({{3}, {4}}));
  auto row = tape.constant(Tensor<double>::from_rows({{1, 2}}));
  CHECK(matmul(row, col).value().item() == 11.0);
  CHECK_THROWS_AS(matmul(col, col), DimensionError);
}

TEST_CASE("masked softmax examples") {
  Tape<double> tape;
  auto run = [&](std::vector<double> logits, std::vector<int> mask) {
    auto x = tape.constant(Tensor<double>::from_rows({logits}));
    return masked_softmax(x, BinaryMask::from_rows({mask})).value();
  };
  const auto uniform = run({0, 0, 0}, {1, 1, 1});
  for (std::size_t i = 0; i < 3; ++i) CHECK(uniform(0, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto forced = run({5, -2, 9}, {0, 1, 0});
  CHECK(forced(0, 0) == 0.0);
  CHECK(forced(0, 1) == 1.0);
  CHECK(forced(0, 2) == 0.0);

  const auto two = run({1, 2, 3}, {1, 1, 0});
  const double e1 = std::exp(1.0), e2 = std::exp(2.0);
  CHECK(std::abs(two(0, 0) - e1 / (e1 + e2)) < 1e-15);
  CHECK(std::abs(two(0, 1) - e2 / (e1 + e2)) < 1e-15);
  CHECK(two(0, 2) == 0.0);

  CHECK_THROWS_AS(run({1, 2}, {0, 0}), InvalidPatientError);
}

TEST_CASE("masked softmax ignores non-finite masked logits") {
  Tape<double> tape;
  auto x = tape.parameter("x", Tensor<double>::from_rows({{std::numeric_limits<double>::infinity(), 0.5, 1.0}}));
  auto y = masked_softmax(x, BinaryMask::from_rows({{0, 1, 1}}));
  CHECK(y.value().all_finite());
  auto g = tape.backward(weighted_sum(y, 3));
  CHECK(g.at("x")[0] == 0.0);
}

TEST_CASE("elementwise and reduction examples") {
  Tape<double> tape;
  auto r = relu(tape.constant(Tensor<double>::from_rows({{-1, 2}}))).value();
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 1) == 2.0);
  auto m = mean_rows(tape.constant(Tensor<double>::from_rows({{2, 4}, {0, 0}}))).value();
  CHECK(m == Tensor<double>::from_rows({{1, 2}}));
  auto d = squared_euclidean_pairwise(tape.constant(Tensor<double>::from_rows({{0, 0}, {3, 4}}))).value();
  CHECK(d(0, 1) == 25.0);
  CHECK(d(1, 0) == 25.0);
  CHECK(d(0, 0) == 0.0);
  CHECK_THROWS_AS(add(tape.constant(Tensor<double>(2, 2)), tape.constant(Tensor<double>(2, 3))),
                  DimensionError);
}

TEST_CASE("backward closed forms") {
  SUBCASE("sum of W") {
    Tape<double> tape;
    auto w = tape.parameter("W", Tensor<double>::from_rows({{1, -2}, {3, 4}}));
    auto g = tape.backward(sum_all(w));
    CHECK(g.at("W") == Tensor<double>(2, 2, 1.0));
  }
  SUBCASE("squared norm of Wx") {
    std::mt19937_64 rng(11);
    const auto w0 = random_tensor(3, 4, rng);
    const auto x0 = random_tensor(4, 1, rng);
    Tape<double> tape;
    auto w = tape.parameter("W", w0);
    auto wx = matmul(w, tape.constant(x0));
    auto g = tape.backward(sum_all(mul(wx, wx)));
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 4; ++b) {
        CHECK(std::abs(g.at("W")(a, b) - 2.0 * wx.value()(a, 0) * x0(b, 0)) < 1e-14);
      }
    }
  }
  SUBCASE("non-scalar loss") {
    Tape<double> tape;
    auto w = tape.parameter("W", Tensor<double>(2, 2, 1.0));
    CHECK_THROWS_AS(tape.backward(w), ContractError);
  }
  SUBCASE("unreachable parameter gets zeros") {
    Tape<double> tape;
    auto a = tape.parameter("a", Tensor<double>(1, 2, 1.0));
    tape.parameter("b", Tensor<double>(3, 1, 5.0));
    auto g = tape.backward(sum_all(a));
    CHECK(g.at("b") == Tensor<double>(3, 1, 0.0));
  }
}

TEST_CASE("backward is bitwise deterministic") {
  auto run = [] {
    std::mt19937_64 rng(5);
    Tape<double> tape;
    auto w = tape.parameter("W", random_tensor(4, 3, rng));
    auto x = tape.constant(random_tensor(6, 4, rng));
    auto y = relu(matmul(x, w));
    return tape.backward(weighted_sum(squared_euclidean_pairwise(y), 9)).at("W");
  };
  CHECK(run() == run());
}

TEST_CASE("grad_check oracle examples") {
  ParameterSet<double> params;
  params.add("x", Tensor<double>::from_rows({{0.3, -1.2, 2.0}}));
  SUBCASE("quadratic") {
    auto f = [](Tape<double>& t, const ParameterSet<double>& p) {
      auto x = t.bind(p, "x");
      return sum_all(mul(x, x));
    };
    CHECK(grad_check(f, params).max_relative_error < 1e-8);
  }
  SUBCASE("constant function") {
    auto f = [](Tape<double>& t, const ParameterSet<double>&) {
      return t.constant(Tensor<double>::scalar(4.0));
    };
    const auto r = grad_check(f, params);
    CHECK(r.max_relative_error == 0.0);
    CHECK(r.checked == 3);
  }
  SUBCASE("masked softmax into cross entropy") {
    std::mt19937_64 rng(2);
    ParameterSet<double> p2;
    p2.add("logits", random_tensor(4, 3, rng, -2, 2));
    const BinaryMask mask = BinaryMask::from_rows({{1, 1, 0}, {0, 1, 1}, {1, 1, 1}, {0, 0, 1}});
    auto f = [&](Tape<double>& t, const ParameterSet<double>& p) {
      auto a = masked_softmax(t.bind(p, "logits"), mask);
      const std::vector<int> y{0, 2, 1, 2};
      return softmax_cross_entropy_sum(a, std::span<const int>(y));
    };
    CHECK(grad_check(f, p2).max_relative_error < 1e-5);
  }
  SUBCASE("non-finite evaluation") {
    auto f = [](Tape<double>& t, const ParameterSet<double>& p) {
      auto x = t.bind(p, "x");
      return sum_all(scale(x, std::numeric_limits<double>::infinity()));
    };
    CHECK_THROWS_AS(grad_check(f, params), NumericError);
  }
}

// Every differentiable op against central differences, 20 seeds each.
TEST_CASE("per-op gradient checks") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const OpFixture fx(seed);
    for (const auto& [name, f] : fx.cases()) {
      const auto r = grad_check(f, fx.params);
      CAPTURE(name);
      CAPTURE(seed);
      CHECK(r.max_relative_error < 1e-6);
      worst = std::max(worst, r.max_relative_error);
    }
  }
  MESSAGE("worst per-op relative error " << worst);
}

TEST_CASE("neighbor mean contract") {
  Tape<double> tape;
  NeighborLists adj;
  adj.node_count = 2;
  adj.offsets = {0, 1, 1};
  adj.neighbors = {1};
  adj.edge_feature = {0.5};
  auto z = tape.constant(Tensor<double>::from_rows({{1, 2}, {3, 4}}));
  CHECK_THROWS_AS(neighbor_mean(z, adj), ContractError);
  adj.allow_isolated = true;
  const auto out = neighbor_mean(z, adj).value();
  CHECK(out == Tensor<double>::from_rows({{3, 4, 0.5}, {0, 0, 0}}));
  CHECK(neighbor_mean(z, adj, true).value()(0, 2) == 0.0);
}

}  // TEST_SUITE
