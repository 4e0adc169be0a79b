// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Classification, ranking and cluster-quality metrics.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "magnet/tensor.hpp"

namespace magnet {

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double mcc = 0.0;
  std::vector<double> per_class_f1;
  std::vector<std::size_t> support;
};

// Per-class F1 with no true and no predicted instance is 0; MCC is the
// multiclass (Gorodkin) form and 0 when a marginal is degenerate.
ClassificationMetrics classification_metrics(std::span<const int> truth,
                                             std::span<const int> predicted,
                                             std::size_t class_count);

// Mann-Whitney statistic with midranks. Class 1 is positive.
double auroc(std::span<const int> truth, std::span<const double> scores);

// Area under the interpolated precision-recall step curve: each recall step
// is weighted by the best precision reachable at that recall or higher.
double auprc(std::span<const int> truth, std::span<const double> scores);

struct ClusterMetrics {
  double silhouette = 0.0;
  double davies_bouldin = 0.0;  // +inf when two centroids coincide
};

// Euclidean silhouette (singleton clusters score 0) and Davies-Bouldin.
ClusterMetrics cluster_metrics(const Tensor<double>& z, std::span<const int> labels);

struct MetricsBundle {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double mcc = 0.0;
  std::optional<double> auroc;
  std::optional<double> auprc;
  std::optional<double> silhouette;
  std::optional<double> davies_bouldin;
  std::vector<double> per_class_f1;

  // Fixed keys; undefined or non-finite values are null.
  nlohmann::json to_json() const;
  static MetricsBundle from_json(const nlohmann::json& j);
  // Looks up a metric by its JSON key; nullopt when undefined.
  std::optional<double> get(const std::string& key) const;
};

inline constexpr const char* kMetricKeys[] = {"accuracy", "macro_f1", "weighted_f1", "mcc",
                                               "auroc",    "auprc",    "silhouette",  "davies_bouldin"};

// Full bundle from class probabilities (N x C) and, optionally, embeddings
// for the cluster metrics. Ranking metrics are only defined for C == 2 with
// both classes present; cluster metrics need two or more distinct labels.
MetricsBundle evaluate_predictions(std::span<const int> truth, const Tensor<double>& probabilities,
                                   const Tensor<double>* embedding = nullptr);

std::vector<int> argmax_rows(const Tensor<double>& scores);

}  // namespace magnet
