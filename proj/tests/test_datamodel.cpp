// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <numeric>
#include <set>

#include "magnet/errors.hpp"
#include "test_util.hpp"

using namespace magnet;
using namespace magnet::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("magnet_datamodel_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Complete dataset with n patients, labels j % classes.
MultiomicsDataset complete(std::size_t n, std::size_t m, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return tiny_dataset(BinaryMask(n, m, 1), std::vector<std::size_t>(m, 3), classes, rng);
}

std::size_t column_sum(const BinaryMask& mask, std::size_t i) {
  std::size_t s = 0;
  for (std::size_t j = 0; j < mask.rows(); ++j) s += mask(j, i);
  return s;
}

}  // namespace

TEST_SUITE("datamodel") {

TEST_CASE("split sizes on matched and unmatched halves") {
  auto ds = complete(200, 3, 2, 1);
  for (std::size_t j = 100; j < 200; ++j) ds.mask.set(j, 2, false);
  ds.clear_masked_rows();
  const auto split = split_dataset(ds, 3);
  CHECK(split.count(SplitTag::kTrain) == 140);
  CHECK(split.count(SplitTag::kValidation) == 20);
  CHECK(split.count(SplitTag::kTest) == 40);
  // Matched and unmatched halves are each split 7:1:2.
  std::size_t matched_test = 0;
  for (auto j : split.ids(SplitTag::kTest)) matched_test += j < 100;
  CHECK(matched_test == 20);
  CHECK(split.train_side(true).size() == 160);
  CHECK(split.train_side(false).size() == 140);
}

TEST_CASE("split determinism and seed dependence") {
  const auto ds = complete(100, 2, 3, 2);
  const auto a = split_dataset(ds, 5), b = split_dataset(ds, 5), c = split_dataset(ds, 6);
  CHECK(a.tags == b.tags);
  CHECK(a.tags != c.tags);
  for (auto tag : {SplitTag::kTrain, SplitTag::kValidation, SplitTag::kTest}) {
    CHECK(a.count(tag) == c.count(tag));
  }
  CHECK_THROWS_AS(split_dataset(complete(9, 2, 2, 0), 1), DataError);
}

TEST_CASE("split names") {
  CHECK(parse_split("validation") == SplitTag::kValidation);
  CHECK(std::string(split_name(SplitTag::kTest)) == "test");
  CHECK_THROWS_AS(parse_split("holdout"), ConfigError);
}

TEST_CASE("scenario: random mask with zero probability is the identity") {
  const auto ds = complete(50, 3, 2, 4);
  const auto out = apply_scenario(ds, {ScenarioKind::kRandomMask, std::nullopt, 0.0, 9});
  CHECK(out.mask == ds.mask);
  CHECK(out.modalities[1] == ds.modalities[1]);
}

TEST_CASE("scenario: intact one") {
  const auto ds = complete(100, 3, 2, 4);
  const auto out = apply_scenario(ds, {ScenarioKind::kIntactOne, 0, 0.5, 9});
  CHECK(column_sum(out.mask, 0) == 100);
  CHECK(column_sum(out.mask, 1) == 50);
  CHECK(column_sum(out.mask, 2) == 50);
  out.validate();
  CHECK_THROWS_AS(apply_scenario(ds, {ScenarioKind::kIntactOne, std::nullopt, 0.5, 9}), ConfigError);
  CHECK_THROWS_AS(apply_scenario(ds, {ScenarioKind::kRandomMask, 1, 0.5, 9}), ConfigError);
  CHECK_THROWS_AS(apply_scenario(ds, {ScenarioKind::kRandomMask, std::nullopt, 1.0, 9}), ConfigError);
}

TEST_CASE("scenario: shared core") {
  const auto ds = complete(500, 3, 2, 4);
  const auto out = apply_scenario(ds, {ScenarioKind::kSharedCore, std::nullopt, 0.8, 2});
  std::size_t full = 0, single = 0;
  for (std::size_t j = 0; j < 500; ++j) {
    const auto c = out.mask.row_count(j);
    full += c == 3;
    single += c == 1;
  }
  CHECK(full == 100);
  CHECK(single == 400);
  // Masked rows are zeroed.
  for (std::size_t j = 0; j < 500; ++j) {
    for (std::size_t i = 0; i < 3; ++i) {
      if (!out.mask(j, i)) {
        for (double v : out.modalities[i].row(j)) CHECK(v == 0.0);
      }
    }
  }
}

TEST_CASE("scenario: random mask density and row validity") {
  const auto ds = gen_scalability({500, 4, 8, 3});
  const auto out = apply_scenario(ds, {ScenarioKind::kRandomMask, std::nullopt, 0.5, 11});
  double on = 0;
  for (std::size_t j = 0; j < 500; ++j) {
    CHECK(out.mask.row_count(j) >= 1);
    on += static_cast<double>(out.mask.row_count(j));
  }
  // Resampling all-missing rows lifts the density slightly above 0.5.
  CHECK(std::abs(on / 2000.0 - 0.5) <= 0.05);
}

TEST_CASE("preprocess: min-max scaling") {
  MultiomicsDataset ds;
  ds.modalities.push_back(Tensor<double>::from_rows({{1}, {2}, {3}, {4}}));
  ds.modality_names = {"m0"};
  ds.feature_names = {{"f"}};
  ds.labels = {0, 1, 0, 1};
  ds.patient_ids = {"a", "b", "c", "d"};
  ds.class_count = 2;
  ds.mask = BinaryMask(4, 1, 1);
  const auto out = preprocess(ds, {0, 1, 2, 3}, PreprocessOptions{});
  const std::vector<double> expected{0, 1.0 / 3.0, 2.0 / 3.0, 1};
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(out.modalities[0](j, 0) - expected[j]) < 1e-15);

  SUBCASE("statistics come from the fit rows only") {
    const auto fit = preprocess(ds, {0, 1}, PreprocessOptions{});
    CHECK(fit.modalities[0](0, 0) == 0.0);
    CHECK(fit.modalities[0](1, 0) == 1.0);
    CHECK(fit.modalities[0](3, 0) == 3.0);
  }
  SUBCASE("constant feature maps to zero") {
    auto flat = ds;
    flat.modalities[0] = Tensor<double>(4, 1, 7.0);
    const auto out2 = preprocess(flat, {0, 1, 2, 3}, PreprocessOptions{});
    for (std::size_t j = 0; j < 4; ++j) CHECK(out2.modalities[0](j, 0) == 0.0);
  }
}

TEST_CASE("preprocess: sparse features dropped, mean imputation") {
  MultiomicsDataset ds;
  Tensor<double> x(20, 2);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < 20; ++j) {
    x(j, 0) = j < 3 ? nan : static_cast<double>(j);  // 15% missing
    x(j, 1) = j == 5 ? nan : static_cast<double>(j % 4);  // 5% missing
  }
  ds.modalities.push_back(x);
  ds.modality_names = {"m0"};
  ds.feature_names = {{"sparse", "dense"}};
  for (std::size_t j = 0; j < 20; ++j) {
    ds.labels.push_back(static_cast<int>(j % 2));
    ds.patient_ids.push_back("p" + std::to_string(j));
  }
  ds.class_count = 2;
  ds.mask = BinaryMask(20, 1, 1);
  std::vector<std::size_t> all(20);
  std::iota(all.begin(), all.end(), 0);
  const auto out = preprocess(ds, all, PreprocessOptions{});
  REQUIRE(out.feature_names[0] == std::vector<std::string>{"dense"});
  // Imputed with the observed mean (29/19) and scaled by the range 3.
  CHECK(std::abs(out.modalities[0](5, 0) - (29.0 / 19.0) / 3.0) < 1e-12);
  out.validate();
}

TEST_CASE("preprocess: ANOVA top-k keeps the discriminative feature") {
  MultiomicsDataset ds;
  Tensor<double> x(8, 2);
  const std::vector<double> a{-0.5, 0.5, 0.2, -0.2, 9.5, 10.5, 10.2, 9.8};
  const std::vector<double> b{4, 6, 5, 5, 6, 4, 5.5, 4.5};
  for (std::size_t j = 0; j < 8; ++j) {
    x(j, 0) = b[j];
    x(j, 1) = a[j];
    ds.labels.push_back(j < 4 ? 0 : 1);
    ds.patient_ids.push_back("p" + std::to_string(j));
  }
  ds.modalities.push_back(x);
  ds.modality_names = {"m0"};
  ds.feature_names = {{"B", "A"}};
  ds.class_count = 2;
  ds.mask = BinaryMask(8, 1, 1);
  PreprocessOptions opts;
  opts.defaults.top_k = 1;
  const auto out = preprocess(ds, {0, 1, 2, 3, 4, 5, 6, 7}, opts);
  CHECK(out.feature_names[0] == std::vector<std::string>{"A"});

  // Hand-computed F for A: group means 0 and 10, SSB = 200, SSW = 1.16.
  CHECK(std::abs(anova_f(a, ds.labels) - 200.0 / (1.16 / 6.0)) < 1e-9);
  CHECK(anova_f(b, ds.labels) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("preprocess is idempotent on its own output") {
  std::mt19937_64 rng(3);
  auto ds = tiny_dataset(random_mask(30, 2, rng), {5, 4}, 2, rng);
  std::vector<std::size_t> rows(30);
  std::iota(rows.begin(), rows.end(), 0);
  const auto once = preprocess(ds, rows, PreprocessOptions{});
  const auto twice = preprocess(once, rows, PreprocessOptions{});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < once.modalities[i].size(); ++k) {
      CHECK(std::abs(once.modalities[i][k] - twice.modalities[i][k]) < 1e-12);
    }
  }
}

TEST_CASE("load_csv presence mask") {
  const auto dir = scratch("presence");
  write_text(dir / "a.csv", "patient_id,x\np1,1\np2,2\n");
  write_text(dir / "b.csv", "patient_id,y\np2,3\n");
  write_text(dir / "c.csv", "patient_id,z\np1,4\np2,5\n");
  write_text(dir / "labels.csv", "patient_id,label\np1,0\np2,1\n");
  const auto ds = load_csv({dir / "a.csv", dir / "b.csv", dir / "c.csv"}, dir / "labels.csv");
  REQUIRE(ds.patient_ids == std::vector<std::string>{"p1", "p2"});
  CHECK(ds.mask == BinaryMask::from_rows({{1, 0, 1}, {1, 1, 1}}));
  CHECK(ds.modality_names == std::vector<std::string>{"a", "b", "c"});

  write_text(dir / "empty.csv", "patient_id,label\n");
  CHECK_THROWS_AS(load_csv({dir / "a.csv"}, dir / "empty.csv"), DataError);
}

TEST_CASE("load_csv on a BRCA-shaped cohort") {
  // 956 patients; the second modality covers 328 of them.
  const auto dir = scratch("brca");
  std::ofstream a(dir / "mrna.csv"), d(dir / "dna.csv"), l(dir / "labels.csv");
  a << "patient_id,g1,g2\n";
  d << "patient_id,c1\n";
  l << "patient_id,label\n";
  for (int j = 0; j < 956; ++j) {
    a << "p" << j << "," << j % 7 << "," << j % 3 << "\n";
    if (j < 328) d << "p" << j << "," << j << "\n";
    l << "p" << j << "," << j % 5 << "\n";
  }
  a.close();
  d.close();
  l.close();
  const auto ds = load_csv({dir / "mrna.csv", dir / "dna.csv"}, dir / "labels.csv");
  CHECK(ds.patient_count() == 956);
  CHECK(column_sum(ds.mask, 1) == 328);
  CHECK(column_sum(ds.mask, 0) == 956);
  CHECK(ds.class_count == 5);
}

TEST_CASE("csv and bundle round trip") {
  std::mt19937_64 rng(8);
  const auto ds = tiny_dataset(random_mask(12, 3, rng), {2, 3, 1}, 3, rng);
  const auto dir = scratch("bundle");
  save_bundle(ds, dir);
  const auto back = load_bundle(dir);
  // Patients come back sorted by id; compare through the id.
  REQUIRE(back.patient_count() == ds.patient_count());
  CHECK(back.modality_names == ds.modality_names);
  for (std::size_t b = 0; b < back.patient_count(); ++b) {
    const auto j = static_cast<std::size_t>(std::stoul(back.patient_ids[b].substr(1)));
    CHECK(back.labels[b] == ds.labels[j]);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.mask(b, i) == ds.mask(j, i));
      const auto x = back.modalities[i].row(b), y = ds.modalities[i].row(j);
      CHECK(std::equal(x.begin(), x.end(), y.begin()));
    }
  }
  // Saving again gives byte-identical files.
  const auto dir2 = scratch("bundle2");
  save_bundle(ds, dir2);
  CHECK(read_text(dir / "labels.csv") == read_text(dir2 / "labels.csv"));
  CHECK(read_text(dir / "m1.csv") == read_text(dir2 / "m1.csv"));
}

TEST_CASE("cluster generator") {
  ClusterGenOptions opts;
  opts.seed = 7;
  const auto a = gen_clusters(opts), b = gen_clusters(opts);
  CHECK(a.patient_count() == 500);
  CHECK(a.modality_count() == 3);
  CHECK(a.class_count == 15);
  CHECK(a.feature_dims() == std::vector<std::size_t>{120, 80, 100});
  CHECK(a.labels == b.labels);
  CHECK(a.modalities[2] == b.modalities[2]);
  std::vector<std::size_t> sizes(15);
  for (int y : a.labels) ++sizes[static_cast<std::size_t>(y)];
  for (auto s : sizes) CHECK(s >= 12);

  SUBCASE("zero noise collapses clusters") {
    ClusterGenOptions q = opts;
    q.noise_sd = 0.0;
    q.n = 60;
    q.clusters = 3;
    q.min_cluster_size = 5;
    const auto ds = gen_clusters(q);
    for (std::size_t j = 1; j < ds.patient_count(); ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        if (ds.labels[j] != ds.labels[k]) continue;
        for (std::size_t i = 0; i < 3; ++i) {
          const auto rj = ds.modalities[i].row(j), rk = ds.modalities[i].row(k);
          CHECK(std::equal(rj.begin(), rj.end(), rk.begin()));
        }
      }
    }
  }
}

TEST_CASE("scalability generator") {
  const auto ds = gen_scalability({500, 10, 1000, 1});
  CHECK(ds.modality_count() == 10);
  for (const auto& x : ds.modalities) {
    CHECK(x.rows() == 500);
    CHECK(x.cols() == 1000);
  }
  CHECK(ds.class_count == 2);
  const auto a = gen_scalability({100, 2, 20, 4}), b = gen_scalability({100, 2, 20, 4});
  CHECK(a.modalities[0] == b.modalities[0]);
  CHECK(a.labels == b.labels);
  CHECK_THROWS_AS(gen_scalability({100, 11, 20, 4}), ConfigError);
}

TEST_CASE("validate rejects broken datasets") {
  auto ds = complete(10, 2, 2, 0);
  ds.labels[0] = 2;
  CHECK_THROWS_AS(ds.validate(), DataError);
  ds.labels[0] = 0;
  ds.modalities[1](3, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ds.validate(), DataError);
  ds.mask.set(3, 1, false);
  ds.validate();
}

}  // TEST_SUITE
