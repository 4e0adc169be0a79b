// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// GraphSAGE layers with edge-feature messages, the MLP decoder, and the
// end-to-end model forward pass (encode -> fuse -> SAGE stack -> decode).
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "magnet/autodiff.hpp"
#include "magnet/fusion.hpp"

namespace magnet {

struct ModelSpec {
  std::vector<std::size_t> input_dims;
  std::size_t class_count = 2;
  std::size_t embed_dim = 128;  // d: encoder hidden/output, fused and SAGE width
  std::size_t heads = 2;
  std::size_t sage_layers = 2;
  double dropout = 0.0;
  bool use_attention = true;      // false: equal-weight fusion (ablation A1)
  bool use_gnn = true;            // false: decoder on the fused embedding (A2)
  bool use_edge_features = true;  // false: e_uv fed as 0 (A3)
  bool fuse_transformed = true;

  std::size_t decoder_hidden() const { return std::max<std::size_t>(1, embed_dim / 2); }
  void validate() const;
};

// Parameter names:
//   enc<i>.{w1,b1,w2,b2}; pmmha.w_lin, pmmha.w_att<k>, pmmha.w_out;
//   sage<l>.{w_root,w_msg,w_agg}; dec.{w1,b1,w2,b2}.
// Weights use He-uniform fan-in init, biases 0, attention vectors 0, and
// w_out identity plus U(-0.01, 0.01) noise.
template <typename Real>
ParameterSet<Real> init_parameters(const ModelSpec& spec, std::uint64_t seed);

// One layer: ReLU(z W_root + Mean_{v in N(u)}([z_v || e_uv]) W_msg W_agg).
// W_msg is applied after the neighbor mean, which is the same linear map as
// averaging transformed messages.
template <typename Real>
Var<Real> sage_layer(Var<Real> z, const NeighborLists& graph, Var<Real> w_root, Var<Real> w_msg,
                     Var<Real> w_agg, bool zero_edge_features = false);

// ReLU(z W1 + b1) W2 + b2.
template <typename Real>
Var<Real> decode(Tape<Real>& tape, const ParameterSet<Real>& params, Var<Real> z);

// Decoder applied directly to the fused embedding (ablation A2).
template <typename Real>
Var<Real> decoder_only_forward(Tape<Real>& tape, const ParameterSet<Real>& params, Var<Real> z);

template <typename Real>
struct ModelInputs {
  std::span<const Tensor<Real>> features;  // one N x d_i matrix per modality
  const BinaryMask* mask = nullptr;
  const NeighborLists* graph = nullptr;
};

template <typename Real>
struct ForwardResult {
  Var<Real> logits;
  Var<Real> fused;           // Z
  Var<Real> node_embedding;  // Z^(L)
  std::vector<Var<Real>> modality_embeddings;
  std::vector<Var<Real>> attention;
};

// `rng` drives dropout; pass nullptr for evaluation.
template <typename Real>
ForwardResult<Real> forward(Tape<Real>& tape, const ParameterSet<Real>& params,
                            const ModelSpec& spec, const ModelInputs<Real>& inputs,
                            std::mt19937_64* rng = nullptr);

template <typename Real>
FusionState capture_fusion_state(const ForwardResult<Real>& result, const BinaryMask& mask);

}  // namespace magnet
