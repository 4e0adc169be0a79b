// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "magnet/csv.hpp"

namespace magnet {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t stable_ceil(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

}  // namespace

SimilarityMatrix pairwise_similarity(const MultiomicsDataset& ds, SimilarityAggregation aggregation) {
  const std::size_t n = ds.patient_count(), m = ds.modality_count();
  SimilarityMatrix out;
  out.values = Tensor<double>(n, n);
  out.validity.assign(n * n, 0);

  // Per-modality Gram matrices of raw and unit-normalised rows.
  std::vector<RowMatrix> cos(m), dot(m);
  std::vector<std::vector<double>> sq_norm(m, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const auto& x = ds.modalities[i];
    RowMatrix raw = Eigen::Map<const RowMatrix>(x.data().data(), static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(x.cols()));
    for (std::size_t j = 0; j < n; ++j) {
      if (!ds.mask(j, i)) raw.row(static_cast<Eigen::Index>(j)).setZero();
    }
    RowMatrix unit = raw;
    for (std::size_t j = 0; j < n; ++j) {
      const double norm2 = raw.row(static_cast<Eigen::Index>(j)).squaredNorm();
      sq_norm[i][j] = norm2;
      if (norm2 > 0.0) {
        unit.row(static_cast<Eigen::Index>(j)) /= std::sqrt(norm2);
      } else {
        unit.row(static_cast<Eigen::Index>(j)).setZero();
      }
    }
    if (aggregation == SimilarityAggregation::kMeanCosine) {
      cos[i].noalias() = unit * unit.transpose();
    } else {
      dot[i].noalias() = raw * raw.transpose();
    }
  }

  for (std::size_t u = 0; u < n; ++u) {
    out.values(u, u) = 1.0;
    out.validity[u * n + u] = 1;
    for (std::size_t v = u + 1; v < n; ++v) {
      std::size_t shared = 0;
      double acc = 0.0, nu = 0.0, nv = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (!(ds.mask(u, i) && ds.mask(v, i))) continue;
        ++shared;
        const auto ui = static_cast<Eigen::Index>(u), vi = static_cast<Eigen::Index>(v);
        if (aggregation == SimilarityAggregation::kMeanCosine) {
          acc += cos[i](ui, vi);
        } else {
          acc += dot[i](ui, vi);
          nu += sq_norm[i][u];
          nv += sq_norm[i][v];
        }
      }
      if (shared == 0) continue;
      double s = 0.0;
      if (aggregation == SimilarityAggregation::kMeanCosine) {
        s = acc / static_cast<double>(shared);
      } else {
        s = (nu > 0.0 && nv > 0.0) ? acc / (std::sqrt(nu) * std::sqrt(nv)) : 0.0;
      }
      s = std::clamp(s, -1.0, 1.0);
      out.values(u, v) = s;
      out.values(v, u) = s;
      out.validity[u * n + v] = 1;
      out.validity[v * n + u] = 1;
    }
  }
  return out;
}

// ---- PatientGraph ------------------------------------------------------------

std::vector<std::vector<std::size_t>> PatientGraph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(node_count);
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

std::vector<std::size_t> PatientGraph::degrees() const {
  std::vector<std::size_t> deg(node_count, 0);
  for (const auto& e : edges) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

NeighborLists PatientGraph::neighbor_lists(const std::vector<std::size_t>& nodes,
                                           bool allow_isolated) const {
  constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> local(node_count, kAbsent);
  for (std::size_t k = 0; k < nodes.size(); ++k) local[nodes[k]] = k;

  std::vector<std::vector<std::pair<std::size_t, double>>> lists(nodes.size());
  for (const auto& e : edges) {
    const std::size_t a = local[e.u], b = local[e.v];
    if (a == kAbsent || b == kAbsent) continue;
    lists[a].emplace_back(b, e.similarity);
    lists[b].emplace_back(a, e.similarity);
  }
  NeighborLists out;
  out.node_count = nodes.size();
  out.allow_isolated = allow_isolated;
  out.offsets.assign(1, 0);
  for (auto& list : lists) {
    std::sort(list.begin(), list.end());
    for (const auto& [v, s] : list) {
      out.neighbors.push_back(v);
      out.edge_feature.push_back(s);
    }
    out.offsets.push_back(out.neighbors.size());
  }
  return out;
}

NeighborLists PatientGraph::neighbor_lists(bool allow_isolated) const {
  std::vector<std::size_t> all(node_count);
  for (std::size_t k = 0; k < node_count; ++k) all[k] = k;
  return neighbor_lists(all, allow_isolated);
}

double nearest_rank_quantile(std::vector<double> values, double rate) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  std::sort(values.begin(), values.end());
  const std::size_t rank = std::min(values.size(), stable_ceil(rate * static_cast<double>(values.size())));
  if (rank == 0) return -std::numeric_limits<double>::infinity();
  return values[rank - 1];
}

namespace {

// Joins each isolated node in `nodes` (index order) to its most similar valid
// neighbor among `nodes`.
void reconnect(PatientGraph& g, const SimilarityMatrix& sims, const std::vector<std::size_t>& nodes,
               std::size_t* reconnected) {
  std::vector<char> member(g.node_count, 0);
  for (auto u : nodes) member[u] = 1;
  std::vector<std::size_t> deg(g.node_count, 0);
  for (const auto& e : g.edges) {
    if (member[e.u] && member[e.v]) {
      ++deg[e.u];
      ++deg[e.v];
    }
  }
  std::size_t count = 0;
  for (auto u : nodes) {
    if (deg[u] > 0) continue;
    std::size_t best = g.node_count;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (auto v : nodes) {
      if (v == u || !sims.valid(u, v)) continue;
      if (sims(u, v) > best_sim) {
        best_sim = sims(u, v);
        best = v;
      }
    }
    if (best == g.node_count) {
      throw DataError("graph: node " + std::to_string(u) + " has no valid neighbor to reconnect to");
    }
    g.edges.push_back(Edge{std::min(u, best), std::max(u, best), best_sim, true});
    ++deg[u];
    ++deg[best];
    ++count;
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  if (reconnected) *reconnected = count;
}

}  // namespace

PatientGraph build_graph(const MultiomicsDataset& ds, const SimilarityMatrix& sims,
                         const GraphBuildOptions& opts) {
  const std::size_t n = ds.patient_count();
  if (n < 2) throw DataError("graph: at least two patients required");
  if (sims.size() != n) throw DimensionError("graph: similarity matrix size mismatch");
  if (!(opts.sparsity_rate >= 0.0 && opts.sparsity_rate < 1.0)) {
    throw ConfigError("graph: sparsity rate must lie in [0, 1)");
  }
  std::vector<double> candidates;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (sims.valid(u, v)) candidates.push_back(sims(u, v));
    }
  }
  PatientGraph g;
  g.node_count = n;
  g.threshold = nearest_rank_quantile(candidates, opts.sparsity_rate);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (sims.valid(u, v) && sims(u, v) > g.threshold) {
        g.edges.push_back(Edge{u, v, sims(u, v), false});
      }
    }
  }
  const auto deg = g.degrees();
  g.isolated_before_reconnection =
      static_cast<std::size_t>(std::count(deg.begin(), deg.end(), std::size_t{0}));
  if (opts.reconnect_isolated) {
    std::vector<std::size_t> all(n);
    for (std::size_t k = 0; k < n; ++k) all[k] = k;
    reconnect(g, sims, all, nullptr);
  }
  return g;
}

PatientGraph inductive_filter(const PatientGraph& g, const SplitAssignment& split, GraphMode mode,
                              bool merge_validation, const SimilarityMatrix& sims,
                              bool reconnect_isolated) {
  if (mode == GraphMode::kFull) return g;
  if (split.tags.size() != g.node_count) throw DimensionError("inductive_filter: split size mismatch");
  PatientGraph out;
  out.node_count = g.node_count;
  out.threshold = g.threshold;
  for (const auto& e : g.edges) {
    if (split.is_train_side(e.u, merge_validation) == split.is_train_side(e.v, merge_validation)) {
      out.edges.push_back(e);
    }
  }
  const auto train = split.train_side(merge_validation);
  const auto deg = out.degrees();
  for (auto u : train) out.isolated_before_reconnection += deg[u] == 0 ? 1 : 0;
  if (reconnect_isolated) reconnect(out, sims, train, nullptr);
  return out;
}

HomophilyStats homophily(const PatientGraph& g, const std::vector<int>& labels,
                         const std::vector<std::size_t>& nodes_in) {
  std::vector<std::size_t> nodes = nodes_in;
  if (nodes.empty()) {
    nodes.resize(g.node_count);
    for (std::size_t k = 0; k < g.node_count; ++k) nodes[k] = k;
  }
  std::vector<char> member(g.node_count, 0);
  for (auto u : nodes) member[u] = 1;

  std::vector<std::size_t> same(g.node_count, 0), deg(g.node_count, 0);
  std::size_t edges = 0, same_edges = 0;
  for (const auto& e : g.edges) {
    if (!member[e.u] || !member[e.v]) continue;
    const bool match = labels[e.u] == labels[e.v];
    ++edges;
    same_edges += match ? 1 : 0;
    ++deg[e.u];
    ++deg[e.v];
    same[e.u] += match ? 1 : 0;
    same[e.v] += match ? 1 : 0;
  }
  HomophilyStats out;
  double node_sum = 0.0;
  std::map<int, std::size_t> class_counts;
  for (auto u : nodes) {
    if (deg[u] == 0) throw ContractError("homophily: node " + std::to_string(u) + " is isolated");
    node_sum += static_cast<double>(same[u]) / static_cast<double>(deg[u]);
    ++class_counts[labels[u]];
  }
  out.node_homophily = nodes.empty() ? 0.0 : node_sum / static_cast<double>(nodes.size());
  out.edge_homophily = edges ? static_cast<double>(same_edges) / static_cast<double>(edges) : 0.0;
  for (const auto& [label, count] : class_counts) {
    const double p = static_cast<double>(count) / static_cast<double>(nodes.size());
    out.random_baseline += p * p;
  }
  return out;
}

DegreeStats degree_stats(const PatientGraph& g, const std::vector<std::size_t>& nodes_in) {
  std::vector<std::size_t> nodes = nodes_in;
  if (nodes.empty()) {
    nodes.resize(g.node_count);
    for (std::size_t k = 0; k < g.node_count; ++k) nodes[k] = k;
  }
  std::vector<char> member(g.node_count, 0);
  for (auto u : nodes) member[u] = 1;
  std::vector<std::size_t> deg(g.node_count, 0);
  for (const auto& e : g.edges) {
    if (member[e.u] && member[e.v]) {
      ++deg[e.u];
      ++deg[e.v];
    }
  }
  DegreeStats out;
  if (nodes.empty()) return out;
  out.min = std::numeric_limits<std::size_t>::max();
  double total = 0.0;
  for (auto u : nodes) {
    ++out.histogram[deg[u]];
    out.min = std::min(out.min, deg[u]);
    out.max = std::max(out.max, deg[u]);
    total += static_cast<double>(deg[u]);
  }
  out.mean = total / static_cast<double>(nodes.size());
  return out;
}

void write_edge_list(const PatientGraph& g, const std::filesystem::path& path,
                     const std::vector<std::string>& patient_ids) {
  CsvWriter w(path);
  w.row({"u", "v", "similarity", "tag"});
  for (const auto& e : g.edges) {
    w.begin_row();
    if (patient_ids.empty()) {
      w.cell(static_cast<long long>(e.u));
      w.cell(static_cast<long long>(e.v));
    } else {
      w.cell(patient_ids[e.u]);
      w.cell(patient_ids[e.v]);
    }
    w.cell(e.similarity);
    w.cell(e.reconnection ? "reconnection" : "similarity");
    w.end_row();
  }
}

}  // namespace magnet
