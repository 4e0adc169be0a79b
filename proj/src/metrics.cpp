// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "magnet/errors.hpp"

namespace magnet {

namespace {

void check_binary(std::span<const int> truth, std::span<const double> scores, std::size_t& pos,
                  std::size_t& neg) {
  if (truth.size() != scores.size()) throw DimensionError("ranking metric: size mismatch");
  pos = neg = 0;
  for (int y : truth) {
    if (y == 1) {
      ++pos;
    } else if (y == 0) {
      ++neg;
    } else {
      throw DataError("ranking metric: labels must be 0 or 1");
    }
  }
  if (pos == 0 || neg == 0) throw UndefinedMetricError("ranking metric: both classes must be present");
}

double distance(const Tensor<double>& z, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t c = 0; c < z.cols(); ++c) {
    const double t = z(a, c) - z(b, c);
    s += t * t;
  }
  return std::sqrt(s);
}

}  // namespace

ClassificationMetrics classification_metrics(std::span<const int> truth,
                                             std::span<const int> predicted,
                                             std::size_t class_count) {
  if (truth.empty()) throw DataError("classification metrics: empty input");
  if (truth.size() != predicted.size()) throw DimensionError("classification metrics: size mismatch");
  const std::size_t c = class_count;
  std::vector<double> confusion(c * c, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= c ||
        static_cast<std::size_t>(predicted[i]) >= c) {
      throw DataError("classification metrics: label outside [0, C)");
    }
    confusion[static_cast<std::size_t>(truth[i]) * c + static_cast<std::size_t>(predicted[i])] += 1.0;
  }
  const double n = static_cast<double>(truth.size());
  std::vector<double> t(c, 0.0), p(c, 0.0);
  double correct = 0.0;
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = 0; b < c; ++b) {
      t[a] += confusion[a * c + b];
      p[b] += confusion[a * c + b];
    }
    correct += confusion[a * c + a];
  }
  ClassificationMetrics m;
  m.accuracy = correct / n;
  m.per_class_f1.resize(c);
  m.support.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    const double tp = confusion[k * c + k];
    const double denom = t[k] + p[k];
    m.per_class_f1[k] = denom > 0.0 ? 2.0 * tp / denom : 0.0;
    m.support[k] = static_cast<std::size_t>(t[k]);
    m.macro_f1 += m.per_class_f1[k];
    m.weighted_f1 += m.per_class_f1[k] * t[k];
  }
  m.macro_f1 /= static_cast<double>(c);
  m.weighted_f1 /= n;
  double tp_sum = 0.0, tt = 0.0, pp = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    tp_sum += t[k] * p[k];
    tt += t[k] * t[k];
    pp += p[k] * p[k];
  }
  const double denom = (n * n - pp) * (n * n - tt);
  m.mcc = denom > 0.0 ? (correct * n - tp_sum) / std::sqrt(denom) : 0.0;
  return m;
}

double auroc(std::span<const int> truth, std::span<const double> scores) {
  std::size_t pos = 0, neg = 0;
  check_binary(truth, scores, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (truth[order[k]] == 1) rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auprc(std::span<const int> truth, std::span<const double> scores) {
  std::size_t pos = 0, neg = 0;
  check_binary(truth, scores, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  // One operating point per distinct threshold.
  std::vector<double> recall, precision;
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (truth[order[j]] == 1 ? tp : fp) += 1.0;
      ++j;
    }
    recall.push_back(tp / static_cast<double>(pos));
    precision.push_back(tp / (tp + fp));
    i = j;
  }
  for (std::size_t k = precision.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double area = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < recall.size(); ++k) {
    area += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return area;
}

ClusterMetrics cluster_metrics(const Tensor<double>& z, std::span<const int> labels) {
  const std::size_t n = z.rows();
  if (labels.size() != n) throw DimensionError("cluster metrics: label count mismatch");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw UndefinedMetricError("cluster metrics: at least two classes required");
  const std::size_t k = classes.size();
  std::vector<std::size_t> cluster(n);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = static_cast<std::size_t>(
        std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
    ++sizes[cluster[i]];
  }

  ClusterMetrics out;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[cluster[j]] += distance(z, i, j);
    }
    const std::size_t own = cluster[i];
    if (sizes[own] == 1) continue;
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) out.silhouette += (b - a) / denom;
  }
  out.silhouette /= static_cast<double>(n);

  const std::size_t d = z.cols();
  Tensor<double> centroids(k, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) centroids(cluster[i], c) += z(i, c);
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t c = 0; c < d; ++c) centroids(a, c) /= static_cast<double>(sizes[a]);
  }
  std::vector<double> scatter(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double t = z(i, c) - centroids(cluster[i], c);
      s += t * t;
    }
    scatter[cluster[i]] += std::sqrt(s);
  }
  for (std::size_t a = 0; a < k; ++a) scatter[a] /= static_cast<double>(sizes[a]);
  double db = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    double worst = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      if (b == a) continue;
      const double sep = distance(centroids, a, b);
      const double spread = scatter[a] + scatter[b];
      double r = 0.0;
      if (sep > 0.0) {
        r = spread / sep;
      } else if (spread > 0.0) {
        r = std::numeric_limits<double>::infinity();
      }
      worst = std::max(worst, r);
    }
    db += worst;
  }
  out.davies_bouldin = db / static_cast<double>(k);
  return out;
}

nlohmann::json MetricsBundle::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const char* key : kMetricKeys) {
    const auto v = get(key);
    j[key] = v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  j["per_class_f1"] = per_class_f1;
  return j;
}

MetricsBundle MetricsBundle::from_json(const nlohmann::json& j) {
  MetricsBundle m;
  auto read = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  m.accuracy = read("accuracy").value_or(0.0);
  m.macro_f1 = read("macro_f1").value_or(0.0);
  m.weighted_f1 = read("weighted_f1").value_or(0.0);
  m.mcc = read("mcc").value_or(0.0);
  m.auroc = read("auroc");
  m.auprc = read("auprc");
  m.silhouette = read("silhouette");
  m.davies_bouldin = read("davies_bouldin");
  if (j.contains("per_class_f1")) m.per_class_f1 = j["per_class_f1"].get<std::vector<double>>();
  return m;
}

std::optional<double> MetricsBundle::get(const std::string& key) const {
  if (key == "accuracy") return accuracy;
  if (key == "macro_f1") return macro_f1;
  if (key == "weighted_f1") return weighted_f1;
  if (key == "mcc") return mcc;
  if (key == "auroc") return auroc;
  if (key == "auprc") return auprc;
  if (key == "silhouette") return silhouette;
  if (key == "davies_bouldin") return davies_bouldin;
  throw ConfigError("unknown metric '" + key + "'");
}

std::vector<int> argmax_rows(const Tensor<double>& scores) {
  std::vector<int> out(scores.rows());
  for (std::size_t j = 0; j < scores.rows(); ++j) {
    const auto row = scores.row(j);
    out[j] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

MetricsBundle evaluate_predictions(std::span<const int> truth, const Tensor<double>& probabilities,
                                   const Tensor<double>* embedding) {
  if (probabilities.rows() != truth.size()) throw DimensionError("evaluate: row count mismatch");
  const std::size_t c = probabilities.cols();
  const auto predicted = argmax_rows(probabilities);
  const auto cls = classification_metrics(truth, predicted, c);
  MetricsBundle m;
  m.accuracy = cls.accuracy;
  m.macro_f1 = cls.macro_f1;
  m.weighted_f1 = cls.weighted_f1;
  m.mcc = cls.mcc;
  m.per_class_f1 = cls.per_class_f1;
  if (c == 2) {
    std::vector<double> scores(truth.size());
    for (std::size_t j = 0; j < truth.size(); ++j) scores[j] = probabilities(j, 1);
    try {
      m.auroc = auroc(truth, scores);
      m.auprc = auprc(truth, scores);
    } catch (const UndefinedMetricError&) {
    }
  }
  if (embedding != nullptr) {
    try {
      const auto cm = cluster_metrics(*embedding, truth);
      m.silhouette = cm.silhouette;
      m.davies_bouldin = cm.davies_bouldin;
    } catch (const UndefinedMetricError&) {
    }
  }
  return m;
}

}  // namespace magnet
