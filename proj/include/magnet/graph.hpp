// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "magnet/autodiff.hpp"
#include "magnet/dataset.hpp"

namespace magnet {

enum class SimilarityAggregation {
  kMeanCosine,    // mean of per-modality cosines over shared modalities
  kConcatCosine,  // cosine of the concatenated shared-modality features
};

// Symmetric N x N patient similarity. valid(u, v) is true when the pair
// shares at least one available modality; the diagonal is valid with value 1.
struct SimilarityMatrix {
  Tensor<double> values;
  std::vector<std::uint8_t> validity;

  std::size_t size() const { return values.rows(); }
  double operator()(std::size_t u, std::size_t v) const { return values(u, v); }
  bool valid(std::size_t u, std::size_t v) const { return validity[u * size() + v] != 0; }
};

SimilarityMatrix pairwise_similarity(
    const MultiomicsDataset& ds,
    SimilarityAggregation aggregation = SimilarityAggregation::kMeanCosine);

struct Edge {
  std::size_t u = 0;  // u < v
  std::size_t v = 0;
  double similarity = 0.0;
  bool reconnection = false;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Undirected patient graph. Message passing sends one message per direction.
struct PatientGraph {
  std::size_t node_count = 0;
  std::vector<Edge> edges;
  double threshold = 0.0;  // similarity cut (beta) used at construction
  std::size_t isolated_before_reconnection = 0;

  std::vector<std::vector<std::size_t>> adjacency() const;
  std::vector<std::size_t> degrees() const;

  // CSR neighbor lists of the subgraph induced by `nodes` (local indices
  // follow the order of `nodes`). Pass all nodes for the full graph.
  NeighborLists neighbor_lists(const std::vector<std::size_t>& nodes,
                               bool allow_isolated = false) const;
  NeighborLists neighbor_lists(bool allow_isolated = false) const;
};

struct GraphBuildOptions {
  double sparsity_rate = 0.6;
  bool reconnect_isolated = true;
};

// Nearest-rank quantile: the value at 1-based rank ceil(rate * n) of the
// sorted sample, or -inf when that rank is 0.
double nearest_rank_quantile(std::vector<double> values, double rate);

// Candidate edges are valid pairs; those with similarity strictly above the
// sparsity-rate quantile survive; isolated nodes are then joined to their most
// similar valid neighbor (ties: lower index) with a reconnection edge.
PatientGraph build_graph(const MultiomicsDataset& ds, const SimilarityMatrix& sims,
                         const GraphBuildOptions& opts);

enum class GraphMode { kTrain, kFull };

// kTrain drops every edge whose endpoints lie on different sides of the
// train/held-out boundary, then reconnects isolated train-side nodes inside
// the train-side subgraph. kFull returns the graph unchanged.
PatientGraph inductive_filter(const PatientGraph& g, const SplitAssignment& split,
                              GraphMode mode, bool merge_validation,
                              const SimilarityMatrix& sims, bool reconnect_isolated = true);

struct HomophilyStats {
  double node_homophily = 0.0;
  double edge_homophily = 0.0;
  double random_baseline = 0.0;  // sum_c p_c^2 over the analysed nodes
};

// Label homophily of the subgraph induced by `nodes` (all nodes when empty).
// Throws ContractError if an analysed node has no neighbor.
HomophilyStats homophily(const PatientGraph& g, const std::vector<int>& labels,
                         const std::vector<std::size_t>& nodes = {});

struct DegreeStats {
  std::map<std::size_t, std::size_t> histogram;
  std::size_t min = 0;
  std::size_t max = 0;
  double mean = 0.0;
};

DegreeStats degree_stats(const PatientGraph& g, const std::vector<std::size_t>& nodes = {});

// Edge-list CSV: u,v,similarity,tag with tag in {similarity, reconnection}.
void write_edge_list(const PatientGraph& g, const std::filesystem::path& path,
                     const std::vector<std::string>& patient_ids = {});

}  // namespace magnet
