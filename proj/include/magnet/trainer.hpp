// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training loop, inductive evaluation, and the experiment harnesses
// (ablation, missingness sweeps, scalability timing, sensitivity sweeps).
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "magnet/dataset.hpp"
#include "magnet/gnn.hpp"
#include "magnet/graph.hpp"
#include "magnet/metrics.hpp"

namespace magnet {

enum class Precision { kF32, kF64 };

const char* precision_name(Precision p);
Precision parse_precision(const std::string& name);

struct RunConfig {
  std::size_t embed_dim = 128;
  std::size_t heads = 2;
  std::size_t sage_layers = 2;
  double sparsity_rate = 0.6;
  double dropout = 0.1;
  double lambda = 0.1;
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  double lr_decay = 0.8;
  std::size_t decay_every = 20;
  std::optional<std::uint64_t> seed;
  Precision precision = Precision::kF64;

  bool no_pmmha = false;
  bool no_gnn = false;
  bool no_edge_feature = false;
  bool no_kl = false;
  bool no_reconnect = false;

  // Final training folds validation patients into the training side;
  // tuning sweeps keep them held out and report validation metrics.
  bool merge_validation = true;
  // Restrict hyperparameters to the published search ranges.
  bool range_checked = false;
  bool fuse_transformed = true;
  bool preprocess = true;
  SimilarityAggregation similarity = SimilarityAggregation::kMeanCosine;

  void validate() const;
  std::uint64_t require_seed() const;
  // lr_0 * lr_decay^floor(epoch / decay_every).
  double lr_at(std::size_t epoch) const;
  double effective_lambda() const { return no_kl ? 0.0 : lambda; }
  ModelSpec model_spec(const std::vector<std::size_t>& input_dims, std::size_t class_count) const;

  nlohmann::json to_json() const;
  // Unknown keys raise ConfigError. Missing keys keep the values in `base`.
  static RunConfig from_json(const nlohmann::json& j, RunConfig base);
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

template <typename Real>
struct AdamState {
  std::vector<Tensor<Real>> m;
  std::vector<Tensor<Real>> v;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update in parameter insertion order. Throws
// NumericError on a non-finite gradient (parameters are left untouched).
template <typename Real>
void adam_step(ParameterSet<Real>& params, const GradientMap<Real>& grads, AdamState<Real>& state,
               double lr);

// Graph views shared by training and evaluation: the similarity matrix, the
// full graph, and the train-mode graph without train/held-out edges.
struct GraphContext {
  SimilarityMatrix sims;
  PatientGraph full;
  PatientGraph train;
};

GraphContext build_graph_context(const MultiomicsDataset& ds, const SplitAssignment& split,
                                 const RunConfig& cfg);

// Fits preprocessing on the training side and transforms every patient.
MultiomicsDataset prepare_dataset(const MultiomicsDataset& ds, const SplitAssignment& split,
                                  const RunConfig& cfg,
                                  const PreprocessOptions& opts = PreprocessOptions{});

struct EpochLoss {
  std::size_t epoch = 0;
  double ce = 0.0;
  double kl = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

// Counters filled while train() runs.
struct ProtocolAudit {
  std::size_t test_label_reads = 0;
  std::size_t held_out_label_reads = 0;
  std::size_t crossing_edge_traversals = 0;
  std::size_t train_label_reads = 0;
};

struct TrainReport {
  std::vector<EpochLoss> losses;
  std::map<std::string, MetricsBundle> metrics;  // keyed by split name
  double seconds = 0.0;                          // epoch loop only
  nlohmann::json config;
  ProtocolAudit audit;
  std::size_t parameter_count = 0;
  std::size_t full_edges = 0;
  std::size_t train_edges = 0;
  double threshold = 0.0;
  std::map<std::string, std::string> exports;

  nlohmann::json to_json() const;
};

struct TrainOptions {
  // Evaluate train/validation/test after the loop.
  bool evaluate_splits = true;
  // Reuse a prebuilt graph context (must match ds, split and cfg).
  const GraphContext* graph = nullptr;
};

struct TrainResult {
  ParameterSet<double> params;  // float runs are widened on return
  TrainReport report;
};

// Full-batch training over train-side patients. Throws NumericError on a
// non-finite loss or gradient and ConfigError on an invalid config.
TrainResult train(const MultiomicsDataset& ds, const SplitAssignment& split, const RunConfig& cfg,
                  const TrainOptions& opts = {});

struct EvalOutputs {
  std::vector<std::size_t> ids;   // evaluated patients (global indices)
  Tensor<double> probabilities;   // rows follow ids
  Tensor<double> embedding;       // node embeddings of those rows
  Tensor<double> fused;           // fused embeddings of those rows
  FusionState fusion;             // over every patient in the forward pass
  std::vector<std::size_t> forward_ids;
  Tensor<double> forward_embedding;  // node embeddings, rows follow forward_ids
};

// Deterministic, dropout-free evaluation. Train split uses the train-mode
// graph over train-side patients; validation and test use the full graph.
MetricsBundle evaluate(const ParameterSet<double>& params, const MultiomicsDataset& ds,
                       const SplitAssignment& split, const RunConfig& cfg, SplitTag tag,
                       EvalOutputs* outputs = nullptr, const GraphContext* graph = nullptr);

void write_loss_log(const std::vector<EpochLoss>& losses, const std::filesystem::path& path);

// ---- Harnesses -------------------------------------------------------------

// Worker count after applying the MAGNET_KIT_THREADS cap (at least 1).
std::size_t resolve_jobs(std::size_t requested);

// Runs task(i) for i in [0, count) on up to `jobs` threads. The first
// exception (by task index) is rethrown after all workers finish.
void run_parallel(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

struct AblationRow {
  std::string variant;
  MetricsBundle test;
  std::size_t parameter_count = 0;
  std::vector<EpochLoss> losses;
};

// Variants: full, no_pmmha (A1), no_gnn (A2), no_edge_feature (A3),
// no_kl (A4), plus no_reconnect when requested. Shared split and seed.
std::vector<AblationRow> run_ablation(const MultiomicsDataset& ds, const SplitAssignment& split,
                                      const RunConfig& cfg, std::size_t jobs = 1,
                                      bool include_no_reconnect = false);

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

struct SweepRow {
  double level = 0.0;
  std::size_t repeat = 0;
  MetricsBundle metrics;
};

struct SweepSummary {
  double level = 0.0;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for one repeat
  std::size_t count = 0;
};

// Per level and repeat r (seed = master + r): apply the scenario, split,
// preprocess, train, and score the test split.
std::vector<SweepRow> run_scenario_sweep(const MultiomicsDataset& base, ScenarioKind kind,
                                         const std::vector<double>& levels, std::size_t repeats,
                                         const RunConfig& cfg, std::size_t jobs = 1,
                                         std::optional<std::size_t> intact_modality = std::nullopt);

std::vector<SweepSummary> summarize_sweep(const std::vector<SweepRow>& rows);
// `level,repeat,metric,value`; undefined metrics are written as empty cells.
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
void write_sweep_summary_csv(const std::vector<SweepSummary>& rows,
                             const std::filesystem::path& path);

struct BenchRow {
  std::size_t modalities = 0;
  std::size_t repeat = 0;
  double seconds = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct BenchOptions {
  std::vector<std::size_t> modality_counts{2, 3, 4, 5, 6, 7, 8, 9, 10};
  double mask_probability = 0.5;
  std::size_t repeats = 5;
  std::size_t patients = 500;
  std::size_t features = 1000;
};

std::vector<BenchRow> run_scalability_bench(const BenchOptions& bench, const RunConfig& cfg,
                                            std::size_t jobs = 1);
// Least-squares line through the per-M mean times.
LinearFit fit_bench(const std::vector<BenchRow>& rows);
void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

struct SensitivityRow {
  std::string parameter;
  double value = 0.0;
  MetricsBundle validation;
};

// Validation metrics per point with the validation set held out.
std::vector<SensitivityRow> run_lambda_sweep(const MultiomicsDataset& ds,
                                             const SplitAssignment& split, const RunConfig& cfg,
                                             const std::vector<double>& lambdas,
                                             std::size_t jobs = 1);
std::vector<SensitivityRow> run_sparsity_sweep(const MultiomicsDataset& ds,
                                               const SplitAssignment& split, const RunConfig& cfg,
                                               const std::vector<double>& rates,
                                               std::size_t jobs = 1);
void write_sensitivity_csv(const std::vector<SensitivityRow>& rows,
                           const std::filesystem::path& path);

}  // namespace magnet
