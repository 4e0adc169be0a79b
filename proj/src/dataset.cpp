// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "magnet/csv.hpp"

namespace magnet {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---- MultiomicsDataset -----------------------------------------------------

std::vector<std::size_t> MultiomicsDataset::feature_dims() const {
  std::vector<std::size_t> dims;
  for (const auto& x : modalities) dims.push_back(x.cols());
  return dims;
}

void MultiomicsDataset::validate(bool require_finite) const {
  const std::size_t n = labels.size();
  if (modalities.empty()) throw DataError("dataset has no modality");
  if (mask.rows() != n || mask.cols() != modalities.size()) {
    throw DataError("mask shape does not match patients x modalities");
  }
  if (!modality_names.empty() && modality_names.size() != modalities.size()) {
    throw DataError("modality name count does not match modality count");
  }
  if (!patient_ids.empty() && patient_ids.size() != n) {
    throw DataError("patient id count does not match label count");
  }
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    if (modalities[i].rows() != n) {
      throw DataError("modality " + std::to_string(i) + " has " +
                      std::to_string(modalities[i].rows()) + " rows, expected " +
                      std::to_string(n));
    }
  }
  for (int y : labels) {
    if (y < 0 || y >= class_count) throw DataError("label outside [0, class_count)");
  }
  mask.validate();
  if (!require_finite) return;
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask(j, i)) continue;
      for (double v : modalities[i].row(j)) {
        if (!std::isfinite(v)) {
          throw DataError("non-finite feature for patient " + std::to_string(j) +
                          " in modality " + std::to_string(i));
        }
      }
    }
  }
}

void MultiomicsDataset::clear_masked_rows() {
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (!mask(j, i)) std::fill(modalities[i].row(j).begin(), modalities[i].row(j).end(), 0.0);
    }
  }
}

// ---- Splits ----------------------------------------------------------------

const char* split_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kValidation: return "validation";
    case SplitTag::kTest: return "test";
  }
  return "?";
}

SplitTag parse_split(const std::string& name) {
  if (name == "train") return SplitTag::kTrain;
  if (name == "validation" || name == "val") return SplitTag::kValidation;
  if (name == "test") return SplitTag::kTest;
  throw ConfigError("unknown split '" + name + "'");
}

std::vector<std::size_t> SplitAssignment::ids(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < tags.size(); ++j) {
    if (tags[j] == tag) out.push_back(j);
  }
  return out;
}

std::size_t SplitAssignment::count(SplitTag tag) const {
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), tag));
}

std::vector<std::size_t> SplitAssignment::train_side(bool merge_validation) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < tags.size(); ++j) {
    if (is_train_side(j, merge_validation)) out.push_back(j);
  }
  return out;
}

bool SplitAssignment::is_train_side(std::size_t patient, bool merge_validation) const {
  const SplitTag t = tags[patient];
  return t == SplitTag::kTrain || (merge_validation && t == SplitTag::kValidation);
}

namespace {

SplitAssignment draw_split(const MultiomicsDataset& ds, std::mt19937_64& rng) {
  const std::size_t n = ds.patient_count();
  // Stratum key: complete rows first, then by class.
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t j = 0; j < n; ++j) {
    const int incomplete = ds.mask.row_complete(j) ? 0 : 1;
    strata[{incomplete, ds.labels[j]}].push_back(j);
  }
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [key, members] : strata) groups.push_back(std::move(members));
  std::shuffle(groups.begin(), groups.end(), rng);

  SplitAssignment out;
  out.tags.assign(n, SplitTag::kTrain);
  std::size_t seen = 0, test_done = 0, val_done = 0;
  for (auto& members : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    seen += members.size();
    const auto test_cum = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(seen)));
    const auto val_cum = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(seen)));
    const std::size_t n_test = test_cum - test_done;
    std::size_t n_val = val_cum - val_done;
    n_val = std::min(n_val, members.size() - std::min(n_test, members.size()));
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (k < n_test) {
        out.tags[members[k]] = SplitTag::kTest;
      } else if (k < n_test + n_val) {
        out.tags[members[k]] = SplitTag::kValidation;
      }
    }
    test_done += n_test;
    val_done += n_val;
  }
  return out;
}

}  // namespace

SplitAssignment split_dataset(const MultiomicsDataset& ds, std::uint64_t seed) {
  if (ds.patient_count() < 10) throw DataError("split requires at least 10 patients");
  std::set<int> classes(ds.labels.begin(), ds.labels.end());
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    SplitAssignment s = draw_split(ds, rng);
    std::set<int> train_classes;
    for (std::size_t j = 0; j < s.tags.size(); ++j) {
      if (s.tags[j] == SplitTag::kTrain) train_classes.insert(ds.labels[j]);
    }
    if (train_classes == classes) return s;
  }
  throw DataError("split: could not place every class in the training set after 100 draws");
}

// ---- Scenarios ---------------------------------------------------------------

const char* scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kNone: return "none";
    case ScenarioKind::kIntactOne: return "intact_one";
    case ScenarioKind::kSharedCore: return "shared_core";
    case ScenarioKind::kRandomMask: return "random_mask";
  }
  return "?";
}

ScenarioKind parse_scenario(const std::string& name) {
  if (name == "none") return ScenarioKind::kNone;
  if (name == "intact_one") return ScenarioKind::kIntactOne;
  if (name == "shared_core") return ScenarioKind::kSharedCore;
  if (name == "random_mask") return ScenarioKind::kRandomMask;
  throw ConfigError("unknown scenario '" + name + "'");
}

void ScenarioSpec::validate(std::size_t modality_count) const {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("scenario ratio must lie in [0, 1)");
  if (kind == ScenarioKind::kNone && ratio > 0.0) {
    throw ConfigError("scenario 'none' does not accept a positive ratio");
  }
  if (kind == ScenarioKind::kIntactOne) {
    if (!intact_modality) throw ConfigError("intact_one requires intact_modality");
    if (*intact_modality >= modality_count) throw ConfigError("intact_modality out of range");
  } else if (intact_modality) {
    throw ConfigError("intact_modality is only valid for intact_one");
  }
}

namespace {

// ceil() that ignores representation error, e.g. (1 - 0.8) * 500.
std::size_t stable_ceil(double x) {
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

}  // namespace

MultiomicsDataset apply_scenario(const MultiomicsDataset& ds, const ScenarioSpec& spec) {
  const std::size_t n = ds.patient_count(), m = ds.modality_count();
  spec.validate(m);
  MultiomicsDataset out = ds;
  if (spec.kind == ScenarioKind::kNone || spec.ratio == 0.0) return out;
  std::mt19937_64 rng(spec.seed);
  BinaryMask mask(n, m, 1);

  switch (spec.kind) {
    case ScenarioKind::kIntactOne: {
      const std::size_t drop = std::min(n, stable_ceil(spec.ratio * static_cast<double>(n)));
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < m; ++i) {
        if (i == *spec.intact_modality) continue;
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t k = 0; k < drop; ++k) mask.set(order[k], i, false);
      }
      break;
    }
    case ScenarioKind::kSharedCore: {
      const std::size_t core = std::min(n, stable_ceil((1.0 - spec.ratio) * static_cast<double>(n)));
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t k = core; k < n; ++k) {
        const std::size_t keep = (k - core) % m;
        for (std::size_t i = 0; i < m; ++i) mask.set(order[k], i, i == keep);
      }
      break;
    }
    case ScenarioKind::kRandomMask: {
      std::bernoulli_distribution masked(spec.ratio);
      for (std::size_t j = 0; j < n; ++j) {
        do {
          for (std::size_t i = 0; i < m; ++i) mask.set(j, i, !masked(rng));
        } while (mask.row_count(j) == 0);
      }
      break;
    }
    case ScenarioKind::kNone:
      break;
  }
  // Scenarios only remove data: anything already missing stays missing.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) mask.set(j, i, mask(j, i) && ds.mask(j, i));
  }
  mask.validate();
  out.mask = std::move(mask);
  out.clear_masked_rows();
  return out;
}

// ---- Generators ----------------------------------------------------------------

namespace {

std::vector<std::string> default_modality_names(std::size_t m) {
  if (m == 3) return {"methylation", "mrna", "protein"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < m; ++i) names.push_back("mod" + std::to_string(i + 1));
  return names;
}

std::string patient_name(std::size_t j) {
  std::ostringstream os;
  os << 'p' << std::setw(4) << std::setfill('0') << j;
  return os.str();
}

void fill_names(MultiomicsDataset& ds) {
  const std::size_t n = ds.patient_count();
  ds.patient_ids.resize(n);
  for (std::size_t j = 0; j < n; ++j) ds.patient_ids[j] = patient_name(j);
  ds.feature_names.resize(ds.modality_count());
  for (std::size_t i = 0; i < ds.modality_count(); ++i) {
    auto& names = ds.feature_names[i];
    names.clear();
    for (std::size_t k = 0; k < ds.modalities[i].cols(); ++k) {
      names.push_back(ds.modality_names[i] + "_f" + std::to_string(k));
    }
  }
}

}  // namespace

MultiomicsDataset gen_clusters(const ClusterGenOptions& opts) {
  if (opts.clusters == 0 || opts.clusters > opts.n) {
    throw ConfigError("gen_clusters: need 1 <= clusters <= n");
  }
  if (opts.dims.empty()) throw ConfigError("gen_clusters: at least one modality required");
  for (auto d : opts.dims) {
    if (d == 0) throw ConfigError("gen_clusters: modality dimension must be >= 1");
  }
  if (opts.noise_sd < 0.0 || opts.cluster_sep < 0.0) {
    throw ConfigError("gen_clusters: scales must be non-negative");
  }
  std::mt19937_64 rng(opts.seed);

  // Uneven cluster sizes: a guaranteed floor plus a Dirichlet share of the rest.
  const std::size_t floor_size = std::min(opts.min_cluster_size, opts.n / opts.clusters);
  const std::size_t spare = opts.n - floor_size * opts.clusters;
  std::gamma_distribution<double> gamma(opts.size_concentration, 1.0);
  std::vector<double> share(opts.clusters);
  for (auto& s : share) s = gamma(rng);
  const double total = std::accumulate(share.begin(), share.end(), 0.0);
  std::vector<std::size_t> sizes(opts.clusters, floor_size);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < opts.clusters; ++c) {
    const double exact = share[c] / total * static_cast<double>(spare);
    const auto whole = static_cast<std::size_t>(std::floor(exact));
    sizes[c] += whole;
    assigned += whole;
    remainders.emplace_back(exact - static_cast<double>(whole), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < spare; ++k, ++assigned) ++sizes[remainders[k].second];

  std::vector<int> labels;
  for (std::size_t c = 0; c < opts.clusters; ++c) {
    labels.insert(labels.end(), sizes[c], static_cast<int>(c));
  }
  std::shuffle(labels.begin(), labels.end(), rng);

  MultiomicsDataset ds;
  ds.labels = labels;
  ds.class_count = static_cast<int>(opts.clusters);
  ds.modality_names = default_modality_names(opts.dims.size());
  ds.mask = BinaryMask(opts.n, opts.dims.size(), 1);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < opts.dims.size(); ++i) {
    const std::size_t d = opts.dims[i];
    Tensor<double> means(opts.clusters, d);
    for (auto& v : means.data()) v = opts.cluster_sep * unit(rng);
    Tensor<double> x(opts.n, d);
    for (std::size_t j = 0; j < opts.n; ++j) {
      const auto mu = means.row(static_cast<std::size_t>(labels[j]));
      auto row = x.row(j);
      for (std::size_t k = 0; k < d; ++k) row[k] = mu[k] + opts.noise_sd * unit(rng);
    }
    ds.modalities.push_back(std::move(x));
  }
  fill_names(ds);
  return ds;
}

MultiomicsDataset gen_scalability(const ScalabilityGenOptions& opts) {
  if (opts.modalities < 2 || opts.modalities > 10) {
    throw ConfigError("gen_scalability: modalities must lie in [2, 10]");
  }
  if (opts.n < 2 || opts.features == 0) throw ConfigError("gen_scalability: empty dataset");
  std::mt19937_64 rng(opts.seed);
  std::vector<int> labels(opts.n);
  for (std::size_t j = 0; j < opts.n; ++j) labels[j] = static_cast<int>(j % 2);
  std::shuffle(labels.begin(), labels.end(), rng);

  MultiomicsDataset ds;
  ds.labels = labels;
  ds.class_count = 2;
  ds.modality_names = default_modality_names(opts.modalities);
  ds.mask = BinaryMask(opts.n, opts.modalities, 1);
  std::normal_distribution<double> unit(0.0, 1.0);
  // A tenth of each block carries a class shift; the rest is noise.
  const std::size_t informative = std::max<std::size_t>(1, opts.features / 10);
  for (std::size_t i = 0; i < opts.modalities; ++i) {
    Tensor<double> x(opts.n, opts.features);
    for (std::size_t j = 0; j < opts.n; ++j) {
      auto row = x.row(j);
      const double shift = labels[j] == 1 ? 0.5 : -0.5;
      for (std::size_t k = 0; k < opts.features; ++k) {
        row[k] = unit(rng) + (k < informative ? shift : 0.0);
      }
    }
    ds.modalities.push_back(std::move(x));
  }
  fill_names(ds);
  return ds;
}

// ---- Preprocessing -----------------------------------------------------------

const ModalityPreprocess& PreprocessOptions::for_modality(std::size_t i) const {
  if (i < per_modality.size() && per_modality[i]) return *per_modality[i];
  return defaults;
}

double anova_f(const std::vector<double>& values, const std::vector<int>& groups) {
  std::map<int, std::pair<double, std::size_t>> sums;
  double grand = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    auto& s = sums[groups[k]];
    s.first += values[k];
    ++s.second;
    grand += values[k];
  }
  const std::size_t n = values.size(), g = sums.size();
  if (g < 2 || n <= g) return 0.0;
  grand /= static_cast<double>(n);
  double between = 0.0;
  for (const auto& [label, s] : sums) {
    const double mean = s.first / static_cast<double>(s.second);
    between += static_cast<double>(s.second) * (mean - grand) * (mean - grand);
  }
  double within = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = sums[groups[k]];
    const double diff = values[k] - s.first / static_cast<double>(s.second);
    within += diff * diff;
  }
  const double ms_between = between / static_cast<double>(g - 1);
  const double ms_within = within / static_cast<double>(n - g);
  if (ms_within == 0.0) return ms_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return ms_between / ms_within;
}

namespace {

Tensor<double> keep_columns(const Tensor<double>& x, const std::vector<std::size_t>& keep) {
  Tensor<double> out(x.rows(), keep.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t k = 0; k < keep.size(); ++k) out(r, k) = x(r, keep[k]);
  }
  return out;
}

std::vector<std::string> keep_names(const std::vector<std::string>& names,
                                    const std::vector<std::size_t>& keep) {
  std::vector<std::string> out;
  if (names.empty()) return out;
  for (auto k : keep) out.push_back(names[k]);
  return out;
}

}  // namespace

MultiomicsDataset preprocess(const MultiomicsDataset& ds, const std::vector<std::size_t>& fit_rows,
                             const PreprocessOptions& opts) {
  ds.validate(/*require_finite=*/false);
  MultiomicsDataset out = ds;
  for (std::size_t i = 0; i < ds.modality_count(); ++i) {
    const auto& cfg = opts.for_modality(i);
    Tensor<double> x = ds.modalities[i];
    std::vector<std::string> names = ds.feature_names.size() > i ? ds.feature_names[i]
                                                                 : std::vector<std::string>{};
    std::vector<std::size_t> fit;
    for (auto j : fit_rows) {
      if (ds.mask(j, i)) fit.push_back(j);
    }
    if (fit.empty()) throw DataError("preprocess: modality " + std::to_string(i) +
                                     " has no fitting patient");
    const double nfit = static_cast<double>(fit.size());

    // Drop sparse features, then impute with the fitting mean.
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      std::size_t missing = 0;
      for (auto j : fit) missing += std::isfinite(x(j, c)) ? 0 : 1;
      if (static_cast<double>(missing) / nfit <= opts.missing_frac_threshold) keep.push_back(c);
    }
    x = keep_columns(x, keep);
    names = keep_names(names, keep);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double sum = 0.0;
      std::size_t seen = 0;
      for (auto j : fit) {
        if (std::isfinite(x(j, c))) {
          sum += x(j, c);
          ++seen;
        }
      }
      const double mean = seen ? sum / static_cast<double>(seen) : 0.0;
      for (std::size_t j = 0; j < x.rows(); ++j) {
        if (ds.mask(j, i) && !std::isfinite(x(j, c))) x(j, c) = mean;
      }
    }

    if (opts.min_max) {
      for (std::size_t c = 0; c < x.cols(); ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (auto j : fit) {
          lo = std::min(lo, x(j, c));
          hi = std::max(hi, x(j, c));
        }
        for (std::size_t j = 0; j < x.rows(); ++j) {
          if (!ds.mask(j, i)) continue;
          x(j, c) = hi > lo ? (x(j, c) - lo) / (hi - lo) : 0.0;
        }
      }
    }

    if (cfg.variance_threshold) {
      keep.clear();
      for (std::size_t c = 0; c < x.cols(); ++c) {
        double mean = 0.0;
        for (auto j : fit) mean += x(j, c);
        mean /= nfit;
        double var = 0.0;
        for (auto j : fit) var += (x(j, c) - mean) * (x(j, c) - mean);
        var /= nfit;
        if (var > *cfg.variance_threshold) keep.push_back(c);
      }
      x = keep_columns(x, keep);
      names = keep_names(names, keep);
    }

    if (cfg.top_k && x.cols() > *cfg.top_k) {
      std::vector<int> groups;
      for (auto j : fit) groups.push_back(ds.labels[j]);
      std::vector<std::pair<double, std::size_t>> scored;
      std::vector<double> column(fit.size());
      for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t k = 0; k < fit.size(); ++k) column[k] = x(fit[k], c);
        scored.emplace_back(anova_f(column, groups), c);
      }
      std::stable_sort(scored.begin(), scored.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      keep.clear();
      for (std::size_t k = 0; k < *cfg.top_k; ++k) keep.push_back(scored[k].second);
      std::sort(keep.begin(), keep.end());
      x = keep_columns(x, keep);
      names = keep_names(names, keep);
    }

    if (x.cols() == 0) {
      throw DataError("preprocess: modality " + std::to_string(i) + " has no feature left");
    }
    out.modalities[i] = std::move(x);
    if (out.feature_names.size() > i) out.feature_names[i] = std::move(names);
  }
  out.clear_masked_rows();
  return out;
}

// ---- CSV ---------------------------------------------------------------------

MultiomicsDataset load_csv(const std::vector<fs::path>& modality_paths, const fs::path& label_path,
                           std::vector<std::string> modality_names) {
  if (modality_paths.empty()) throw DataError("load_csv: no modality file");
  if (modality_names.empty()) {
    for (const auto& p : modality_paths) modality_names.push_back(p.stem().string());
  }
  if (modality_names.size() != modality_paths.size()) {
    throw DataError("load_csv: modality name count does not match file count");
  }

  const CsvTable label_table = read_csv(label_path);
  if (label_table.rows.empty()) throw DataError("load_csv: label file is empty");
  std::map<std::string, std::string> raw_labels;
  for (const auto& row : label_table.rows) {
    if (row.size() < 2) throw DataError("load_csv: label row needs patient_id,label");
    if (!raw_labels.emplace(row[0], row[1]).second) {
      throw DataError("load_csv: duplicate patient id '" + row[0] + "' in labels");
    }
  }

  struct ModalityRows {
    std::vector<std::string> header;
    std::map<std::string, std::vector<double>> rows;
  };
  std::vector<ModalityRows> mods;
  std::set<std::string> present_anywhere;
  for (const auto& path : modality_paths) {
    const CsvTable t = read_csv(path);
    ModalityRows m;
    if (t.header.size() < 2) throw DataError("load_csv: " + path.string() + " has no feature column");
    m.header.assign(t.header.begin() + 1, t.header.end());
    for (const auto& row : t.rows) {
      if (row.size() != t.header.size()) {
        throw DataError("load_csv: ragged row in " + path.string());
      }
      std::vector<double> values;
      for (std::size_t k = 1; k < row.size(); ++k) values.push_back(parse_cell(row[k], path));
      if (!m.rows.emplace(row[0], std::move(values)).second) {
        throw DataError("load_csv: duplicate patient id '" + row[0] + "' in " + path.string());
      }
      present_anywhere.insert(row[0]);
    }
    mods.push_back(std::move(m));
  }

  std::set<std::string> all_ids;
  for (const auto& [id, label] : raw_labels) all_ids.insert(id);
  for (const auto& id : present_anywhere) {
    if (!raw_labels.count(id)) throw DataError("load_csv: patient '" + id + "' has no label");
  }
  for (const auto& id : all_ids) {
    if (!present_anywhere.count(id)) {
      throw DataError("load_csv: patient '" + id + "' is present in no modality");
    }
  }

  MultiomicsDataset ds;
  ds.patient_ids.assign(all_ids.begin(), all_ids.end());
  ds.modality_names = std::move(modality_names);
  const std::size_t n = ds.patient_ids.size(), m = mods.size();

  // Integer labels are used as class ids; anything else is mapped through
  // the sorted set of distinct label strings.
  bool numeric = true;
  for (const auto& [id, text] : raw_labels) {
    char* end = nullptr;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (text.empty() || *end != '\0' || v < 0) numeric = false;
  }
  std::map<std::string, int> codes;
  if (!numeric) {
    for (const auto& [id, text] : raw_labels) codes.emplace(text, 0);
    int next = 0;
    for (auto& [text, code] : codes) code = next++;
  }
  for (const auto& id : ds.patient_ids) {
    const auto& text = raw_labels.at(id);
    const int y = numeric ? std::stoi(text) : codes.at(text);
    ds.labels.push_back(y);
    ds.class_count = std::max(ds.class_count, y + 1);
  }

  ds.mask = BinaryMask(n, m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    Tensor<double> x(n, mods[i].header.size());
    for (std::size_t j = 0; j < n; ++j) {
      auto it = mods[i].rows.find(ds.patient_ids[j]);
      if (it == mods[i].rows.end()) continue;
      ds.mask.set(j, i, true);
      std::copy(it->second.begin(), it->second.end(), x.row(j).begin());
    }
    ds.modalities.push_back(std::move(x));
    ds.feature_names.push_back(mods[i].header);
  }
  ds.validate(/*require_finite=*/false);
  return ds;
}

void save_csv(const MultiomicsDataset& ds, const std::vector<fs::path>& modality_paths,
              const fs::path& label_path) {
  if (modality_paths.size() != ds.modality_count()) {
    throw DataError("save_csv: one path per modality required");
  }
  const std::size_t n = ds.patient_count();
  auto pid = [&](std::size_t j) {
    return ds.patient_ids.empty() ? patient_name(j) : ds.patient_ids[j];
  };
  for (std::size_t i = 0; i < ds.modality_count(); ++i) {
    CsvWriter w(modality_paths[i]);
    std::vector<std::string> header{"patient_id"};
    if (ds.feature_names.size() > i && ds.feature_names[i].size() == ds.modalities[i].cols()) {
      header.insert(header.end(), ds.feature_names[i].begin(), ds.feature_names[i].end());
    } else {
      for (std::size_t k = 0; k < ds.modalities[i].cols(); ++k) {
        header.push_back("f" + std::to_string(k));
      }
    }
    w.row(header);
    for (std::size_t j = 0; j < n; ++j) {
      if (!ds.mask(j, i)) continue;
      w.begin_row();
      w.cell(pid(j));
      for (double v : ds.modalities[i].row(j)) w.cell(v);
      w.end_row();
    }
  }
  CsvWriter labels(label_path);
  labels.row({"patient_id", "label"});
  for (std::size_t j = 0; j < n; ++j) {
    labels.begin_row();
    labels.cell(pid(j));
    labels.cell(static_cast<long long>(ds.labels[j]));
    labels.end_row();
  }
}

void save_bundle(const MultiomicsDataset& ds, const fs::path& dir, const std::string& manifest_extra) {
  fs::create_directories(dir);
  std::vector<fs::path> paths;
  json files = json::array();
  json dims = json::array();
  for (std::size_t i = 0; i < ds.modality_count(); ++i) {
    const std::string file = ds.modality_names[i] + ".csv";
    paths.push_back(dir / file);
    files.push_back(file);
    dims.push_back(ds.modalities[i].cols());
  }
  save_csv(ds, paths, dir / "labels.csv");
  json manifest = json::parse(manifest_extra);
  manifest["kind"] = "dataset";
  manifest["modality_names"] = ds.modality_names;
  manifest["modality_files"] = files;
  manifest["label_file"] = "labels.csv";
  manifest["feature_dims"] = dims;
  manifest["patients"] = ds.patient_count();
  manifest["class_count"] = ds.class_count;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

MultiomicsDataset load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError("dataset bundle has no manifest: " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError("malformed dataset manifest: " + std::string(e.what()));
  }
  if (!manifest.contains("modality_files") || !manifest.contains("label_file")) {
    throw DataError("dataset manifest lacks modality_files/label_file");
  }
  std::vector<fs::path> paths;
  for (const auto& f : manifest["modality_files"]) paths.push_back(dir / f.get<std::string>());
  std::vector<std::string> names = manifest.value("modality_names", std::vector<std::string>{});
  MultiomicsDataset ds = load_csv(paths, dir / manifest["label_file"].get<std::string>(), names);
  if (manifest.contains("class_count")) {
    ds.class_count = std::max(ds.class_count, manifest["class_count"].get<int>());
  }
  return ds;
}

}  // namespace magnet
