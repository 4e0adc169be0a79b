// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Multiomics dataset container, preprocessing, synthetic generators, and the
// missing-modality scenario simulators.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "magnet/mask.hpp"
#include "magnet/tensor.hpp"

namespace magnet {

// Per-modality feature matrices aligned by patient. Rows of patients missing
// a modality are stored as zeros and are never read by the model.
struct MultiomicsDataset {
  std::vector<Tensor<double>> modalities;
  std::vector<int> labels;
  BinaryMask mask;
  std::vector<std::string> modality_names;
  std::vector<std::string> patient_ids;
  std::vector<std::vector<std::string>> feature_names;
  int class_count = 0;

  std::size_t patient_count() const { return labels.size(); }
  std::size_t modality_count() const { return modalities.size(); }
  std::vector<std::size_t> feature_dims() const;

  // Checks shape agreement, label range and mask rows. With require_finite,
  // also rejects NaN/Inf in present rows (raw CSV input may carry NaN until
  // preprocess() imputes it).
  void validate(bool require_finite = true) const;

  // Zeroes the feature rows of every masked (patient, modality) pair.
  void clear_masked_rows();
};

enum class SplitTag : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

const char* split_name(SplitTag tag);
SplitTag parse_split(const std::string& name);

struct SplitAssignment {
  std::vector<SplitTag> tags;

  std::vector<std::size_t> ids(SplitTag tag) const;
  std::size_t count(SplitTag tag) const;
  // Train-side patients: training only, or training plus validation when the
  // validation set is merged for final training.
  std::vector<std::size_t> train_side(bool merge_validation) const;
  bool is_train_side(std::size_t patient, bool merge_validation) const;
};

// Stratified 7:1:2 split. Strata are (complete/incomplete mask row) x class;
// quotas use cumulative rounding so every stratum is within one patient of
// its exact share. Redraws up to 100 times if a class misses training.
SplitAssignment split_dataset(const MultiomicsDataset& ds, std::uint64_t seed);

enum class ScenarioKind { kNone, kIntactOne, kSharedCore, kRandomMask };

const char* scenario_name(ScenarioKind kind);
ScenarioKind parse_scenario(const std::string& name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kNone;
  std::optional<std::size_t> intact_modality;
  double ratio = 0.0;
  std::uint64_t seed = 0;

  void validate(std::size_t modality_count) const;
};

// Simulates missing modalities on a fully observed dataset:
//  intact_one   - one column stays complete, each other column loses
//                 ceil(ratio*N) uniformly chosen patients;
//  shared_core  - ceil((1-ratio)*N) patients keep everything, the rest get
//                 exactly one modality, assigned round-robin after a shuffle;
//  random_mask  - independent Bernoulli(ratio) masking, all-missing rows
//                 redrawn.
MultiomicsDataset apply_scenario(const MultiomicsDataset& ds, const ScenarioSpec& spec);

struct ClusterGenOptions {
  std::size_t n = 500;
  std::size_t clusters = 15;
  std::vector<std::size_t> dims{120, 80, 100};
  double cluster_sep = 1.0;
  double noise_sd = 1.0;
  // Dirichlet concentration for cluster sizes; smaller is more uneven.
  double size_concentration = 4.0;
  std::size_t min_cluster_size = 12;
  std::uint64_t seed = 0;
};

// Gaussian clusters: one mean per (cluster, modality), isotropic noise.
MultiomicsDataset gen_clusters(const ClusterGenOptions& opts);

struct ScalabilityGenOptions {
  std::size_t n = 500;
  std::size_t modalities = 2;
  std::size_t features = 1000;
  std::uint64_t seed = 0;
};

// Binary-class data with `modalities` equally sized feature blocks.
MultiomicsDataset gen_scalability(const ScalabilityGenOptions& opts);

struct ModalityPreprocess {
  std::optional<double> variance_threshold;
  std::optional<std::size_t> top_k;
};

struct PreprocessOptions {
  double missing_frac_threshold = 0.10;
  bool min_max = true;
  // Used for every modality unless overridden by position in per_modality.
  ModalityPreprocess defaults;
  std::vector<std::optional<ModalityPreprocess>> per_modality;

  const ModalityPreprocess& for_modality(std::size_t i) const;
};

// Feature filtering and scaling, applied to each modality independently:
// drop features with more than missing_frac_threshold missing values, impute
// with the feature mean, min-max scale to [0, 1], drop low-variance features,
// keep the top_k by one-way ANOVA F. All statistics and labels come from
// `fit_rows` (training patients); other rows are transformed with them.
MultiomicsDataset preprocess(const MultiomicsDataset& ds,
                             const std::vector<std::size_t>& fit_rows,
                             const PreprocessOptions& opts);

// One-way ANOVA F statistic of `values` grouped by `groups`.
double anova_f(const std::vector<double>& values, const std::vector<int>& groups);

// ---- CSV and bundle I/O ----------------------------------------------------

// One CSV per modality (first column patient_id, header of feature names)
// plus a `patient_id,label` file. A patient absent from a modality file is
// masked for that modality. Empty, "NA" and "nan" cells load as NaN.
MultiomicsDataset load_csv(const std::vector<std::filesystem::path>& modality_paths,
                           const std::filesystem::path& label_path,
                           std::vector<std::string> modality_names = {});

void save_csv(const MultiomicsDataset& ds,
              const std::vector<std::filesystem::path>& modality_paths,
              const std::filesystem::path& label_path);

// Directory layout: <name>.csv per modality, labels.csv, manifest.json.
// `manifest_extra` is a JSON object text merged into the manifest.
void save_bundle(const MultiomicsDataset& ds, const std::filesystem::path& dir,
                 const std::string& manifest_extra = "{}");
MultiomicsDataset load_bundle(const std::filesystem::path& dir);

}  // namespace magnet
