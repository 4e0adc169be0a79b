// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "magnet/errors.hpp"
#include "magnet/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace magnet;
using namespace magnet::testing;

namespace {

// Expands a confusion matrix (rows = truth) into label vectors.
void from_confusion(const std::vector<std::vector<int>>& cm, std::vector<int>& y, std::vector<int>& yhat) {
  for (std::size_t t = 0; t < cm.size(); ++t) {
    for (std::size_t p = 0; p < cm[t].size(); ++p) {
      for (int k = 0; k < cm[t][p]; ++k) {
        y.push_back(static_cast<int>(t));
        yhat.push_back(static_cast<int>(p));
      }
    }
  }
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("perfect and constant predictors") {
  const std::vector<int> y{0, 1, 2, 1, 0};
  const auto perfect = classification_metrics(y, y, 3);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_f1 == 1.0);
  CHECK(perfect.weighted_f1 == 1.0);
  CHECK(perfect.mcc == 1.0);

  const std::vector<int> yb{0, 1, 0, 1}, constant{1, 1, 1, 1};
  const auto c = classification_metrics(yb, constant, 2);
  CHECK(c.mcc == 0.0);
  CHECK(c.accuracy == 0.5);
  CHECK(c.per_class_f1[0] == 0.0);
  CHECK(std::abs(c.per_class_f1[1] - 2.0 / 3.0) < 1e-15);
}

TEST_CASE("three-class confusion matrix") {
  std::vector<int> y, yhat;
  from_confusion({{2, 1, 0}, {0, 2, 0}, {1, 0, 3}}, y, yhat);
  const auto m = classification_metrics(y, yhat, 3);
  const auto o = oracle::classification(y, yhat, 3);
  // Hand values: F1 = 2/3, 4/5, 6/7; accuracy 7/9.
  CHECK(std::abs(m.accuracy - 7.0 / 9.0) < 1e-15);
  CHECK(std::abs(m.macro_f1 - (2.0 / 3.0 + 0.8 + 6.0 / 7.0) / 3.0) < 1e-12);
  CHECK(std::abs(m.weighted_f1 - (3 * 2.0 / 3.0 + 2 * 0.8 + 4 * 6.0 / 7.0) / 9.0) < 1e-12);
  CHECK(std::abs(m.mcc - o.mcc) < 1e-12);
  CHECK(std::abs(m.macro_f1 - o.macro_f1) < 1e-12);
  CHECK(m.support == std::vector<std::size_t>{3, 2, 4});
}

TEST_CASE("classification metrics match brute force") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const int classes = 2 + static_cast<int>(seed % 4);
    std::vector<int> y(20), yhat(20);
    for (auto& v : y) v = static_cast<int>(rng() % static_cast<unsigned>(classes));
    for (auto& v : yhat) v = static_cast<int>(rng() % static_cast<unsigned>(classes));
    const auto m = classification_metrics(y, yhat, static_cast<std::size_t>(classes));
    const auto o = oracle::classification(y, yhat, classes);
    CHECK(std::abs(m.accuracy - o.accuracy) < 1e-10);
    CHECK(std::abs(m.macro_f1 - o.macro_f1) < 1e-10);
    CHECK(std::abs(m.weighted_f1 - o.weighted_f1) < 1e-10);
    CHECK(std::abs(m.mcc - o.mcc) < 1e-10);
  }
}

TEST_CASE("classification metric errors") {
  const std::vector<int> empty;
  CHECK_THROWS_AS(classification_metrics(empty, empty, 2), DataError);
  const std::vector<int> y{0, 2}, p{0, 1};
  CHECK_THROWS_AS(classification_metrics(y, p, 2), DataError);
}

TEST_CASE("ranking metrics") {
  const std::vector<int> y{0, 0, 1, 1};
  const std::vector<double> separated{0.1, 0.2, 0.8, 0.9}, flat{0.5, 0.5, 0.5, 0.5};
  CHECK(auroc(y, separated) == 1.0);
  CHECK(auroc(y, flat) == 0.5);
  CHECK(auprc(y, separated) == 1.0);
  CHECK(auprc(y, flat) == 0.5);

  // 6-point toy: 5 of 9 pairs won plus one tie.
  const std::vector<int> y6{1, 0, 1, 0, 1, 0};
  const std::vector<double> s6{0.9, 0.8, 0.7, 0.7, 0.3, 0.1};
  CHECK(std::abs(auroc(y6, s6) - oracle::auroc(y6, s6)) < 1e-12);
  CHECK(std::abs(auroc(y6, s6) - 5.5 / 9.0) < 1e-15);
  CHECK(std::abs(auprc(y6, s6) - oracle::auprc(y6, s6)) < 1e-12);

  const std::vector<int> one_class{1, 1};
  const std::vector<double> two{0.2, 0.4};
  CHECK_THROWS_AS(auroc(one_class, two), UndefinedMetricError);
  CHECK_THROWS_AS(auprc(one_class, two), UndefinedMetricError);
  const std::vector<int> not_binary{0, 2};
  CHECK_THROWS_AS(auroc(not_binary, two), DataError);
}

TEST_CASE("ranking metrics match brute force") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> y(20);
    std::vector<double> s(20);
    for (std::size_t k = 0; k < 20; ++k) {
      y[k] = static_cast<int>(k % 2);
      s[k] = static_cast<double>(rng() % 7) / 7.0;  // coarse grid forces ties
    }
    CHECK(std::abs(auroc(y, s) - oracle::auroc(y, s)) < 1e-10);
    CHECK(std::abs(auprc(y, s) - oracle::auprc(y, s)) < 1e-10);
  }
}

TEST_CASE("cluster metrics") {
  const auto tight = Tensor<double>::from_rows({{0, 0}, {0, 0.001}, {100, 100}, {100, 100.001}});
  const std::vector<int> two{0, 0, 1, 1};
  const auto far = cluster_metrics(tight, two);
  CHECK(far.silhouette > 0.9999);
  CHECK(far.davies_bouldin < 1e-4);

  const auto mixed = Tensor<double>::from_rows({{0, 0}, {0, 0}, {1, 1}, {1, 1}});
  const std::vector<int> across{0, 1, 0, 1};
  CHECK(cluster_metrics(mixed, across).silhouette <= 0.0);
  CHECK(std::isinf(cluster_metrics(mixed, across).davies_bouldin));

  const std::vector<int> single{0, 0, 0, 0};
  CHECK_THROWS_AS(cluster_metrics(mixed, single), UndefinedMetricError);
}

TEST_CASE("cluster metrics match brute force") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto z = random_tensor(10, 3, rng, -2, 2);
    std::vector<int> labels(10);
    for (std::size_t k = 0; k < 10; ++k) labels[k] = static_cast<int>(k < 5 ? 0 : 1 + k % 2);
    oracle::Matrix zm(10, std::vector<double>(3));
    for (std::size_t r = 0; r < 10; ++r) {
      for (std::size_t c = 0; c < 3; ++c) zm[r][c] = z(r, c);
    }
    const auto m = cluster_metrics(z, labels);
    CHECK(std::abs(m.silhouette - oracle::silhouette(zm, labels)) < 1e-10);
    CHECK(std::abs(m.davies_bouldin - oracle::davies_bouldin(zm, labels)) < 1e-10);
  }
}

TEST_CASE("metrics bundle") {
  const std::vector<int> y{0, 1, 1, 0, 1};
  const auto probs = Tensor<double>::from_rows({{0.8, 0.2}, {0.3, 0.7}, {0.6, 0.4}, {0.9, 0.1}, {0.2, 0.8}});
  const auto z = Tensor<double>::from_rows({{0, 0}, {1, 1}, {1, 0.9}, {0, 0.1}, {1.1, 1}});
  const auto b = evaluate_predictions(y, probs, &z);
  CHECK(b.accuracy == 0.8);
  REQUIRE(b.auroc.has_value());
  CHECK(*b.auroc == 1.0);
  CHECK(b.silhouette.has_value());

  const auto j = b.to_json();
  for (const char* key : kMetricKeys) CHECK(j.contains(key));
  const auto back = MetricsBundle::from_json(j);
  CHECK(back.macro_f1 == b.macro_f1);
  CHECK(back.auprc == b.auprc);
  CHECK(b.get("mcc") == b.mcc);
  CHECK_THROWS_AS(b.get("f2"), ConfigError);

  // Three classes: ranking metrics undefined, serialized as null.
  const std::vector<int> y3{0, 1, 2};
  const auto p3 = Tensor<double>::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto b3 = evaluate_predictions(y3, p3);
  CHECK_FALSE(b3.auroc.has_value());
  CHECK(b3.to_json()["auroc"].is_null());
  CHECK(b3.to_json()["silhouette"].is_null());
  CHECK(argmax_rows(p3) == std::vector<int>{0, 1, 2});
}

}  // TEST_SUITE
