// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/gnn.hpp"

namespace magnet {

void ModelSpec::validate() const {
  if (input_dims.empty()) throw ConfigError("model: at least one modality required");
  for (auto d : input_dims) {
    if (d == 0) throw ConfigError("model: modality with zero features");
  }
  if (class_count < 2) throw ConfigError("model: at least two classes required");
  if (embed_dim == 0) throw ConfigError("model: embedding dimension must be positive");
  if (use_attention && (heads == 0 || embed_dim % heads != 0)) {
    throw ConfigError("model: head count " + std::to_string(heads) +
                      " does not divide embedding dimension " + std::to_string(embed_dim));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model: dropout must lie in [0, 1)");
}

template <typename Real>
ParameterSet<Real> init_parameters(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ParameterSet<Real> params;
  const std::size_t d = spec.embed_dim;
  for (std::size_t i = 0; i < spec.input_dims.size(); ++i) {
    const std::string p = "enc" + std::to_string(i);
    params.add(p + ".w1", he_uniform<Real>(spec.input_dims[i], d, rng));
    params.add(p + ".b1", Tensor<Real>(1, d));
    params.add(p + ".w2", he_uniform<Real>(d, d, rng));
    params.add(p + ".b2", Tensor<Real>(1, d));
  }
  if (spec.use_attention) {
    params.add("pmmha.w_lin", he_uniform<Real>(d, d, rng));
    for (std::size_t k = 0; k < spec.heads; ++k) {
      params.add("pmmha.w_att" + std::to_string(k), Tensor<Real>(d / spec.heads, 1));
    }
    Tensor<Real> w_out = Tensor<Real>::identity(d);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    for (auto& v : w_out.data()) v += static_cast<Real>(noise(rng));
    params.add("pmmha.w_out", std::move(w_out));
  }
  if (spec.use_gnn) {
    for (std::size_t l = 0; l < spec.sage_layers; ++l) {
      const std::string p = "sage" + std::to_string(l);
      params.add(p + ".w_root", he_uniform<Real>(d, d, rng));
      params.add(p + ".w_msg", he_uniform<Real>(d + 1, d, rng));
      params.add(p + ".w_agg", he_uniform<Real>(d, d, rng));
    }
  }
  const std::size_t hidden = spec.decoder_hidden();
  params.add("dec.w1", he_uniform<Real>(d, hidden, rng));
  params.add("dec.b1", Tensor<Real>(1, hidden));
  params.add("dec.w2", he_uniform<Real>(hidden, spec.class_count, rng));
  params.add("dec.b2", Tensor<Real>(1, spec.class_count));
  return params;
}

template <typename Real>
Var<Real> sage_layer(Var<Real> z, const NeighborLists& graph, Var<Real> w_root, Var<Real> w_msg,
                     Var<Real> w_agg, bool zero_edge_features) {
  if (w_msg.rows() != z.cols() + 1) {
    throw DimensionError("sage_layer: W_msg must have d_in + 1 rows");
  }
  Var<Real> root = matmul(z, w_root);
  Var<Real> aggregated = matmul(matmul(neighbor_mean(z, graph, zero_edge_features), w_msg), w_agg);
  return relu(add(root, aggregated));
}

template <typename Real>
Var<Real> decode(Tape<Real>& tape, const ParameterSet<Real>& params, Var<Real> z) {
  Var<Real> hidden = relu(linear(tape, params, "dec.w1", z, "dec.b1"));
  return linear(tape, params, "dec.w2", hidden, "dec.b2");
}

template <typename Real>
Var<Real> decoder_only_forward(Tape<Real>& tape, const ParameterSet<Real>& params, Var<Real> z) {
  return decode(tape, params, z);
}

template <typename Real>
ForwardResult<Real> forward(Tape<Real>& tape, const ParameterSet<Real>& params,
                            const ModelSpec& spec, const ModelInputs<Real>& inputs,
                            std::mt19937_64* rng) {
  if (inputs.mask == nullptr) throw ContractError("forward: mask is required");
  if (spec.use_gnn && spec.sage_layers > 0 && inputs.graph == nullptr) {
    throw ContractError("forward: graph is required when the GNN is enabled");
  }
  const Dropout<Real> dropout(spec.dropout, rng);
  ForwardResult<Real> out;
  out.modality_embeddings = encode(tape, params, inputs.features, dropout);

  if (spec.use_attention) {
    std::vector<Var<Real>> w_att;
    for (std::size_t k = 0; k < spec.heads; ++k) {
      w_att.push_back(tape.bind(params, "pmmha.w_att" + std::to_string(k)));
    }
    auto fused = fuse_multi_head<Real>(out.modality_embeddings, *inputs.mask,
                                       tape.bind(params, "pmmha.w_lin"), w_att,
                                       tape.bind(params, "pmmha.w_out"), spec.fuse_transformed);
    out.fused = fused.z;
    out.attention = std::move(fused.attention);
  } else {
    out.fused = equal_weight_fuse<Real>(out.modality_embeddings, *inputs.mask);
  }

  Var<Real> z = out.fused;
  if (spec.use_gnn) {
    for (std::size_t l = 0; l < spec.sage_layers; ++l) {
      const std::string p = "sage" + std::to_string(l);
      z = sage_layer(z, *inputs.graph, tape.bind(params, p + ".w_root"),
                     tape.bind(params, p + ".w_msg"), tape.bind(params, p + ".w_agg"),
                     !spec.use_edge_features);
      z = dropout(z);
    }
    out.node_embedding = z;
    out.logits = decode(tape, params, z);
  } else {
    out.node_embedding = z;
    out.logits = decoder_only_forward(tape, params, z);
  }
  return out;
}

template <typename Real>
FusionState capture_fusion_state(const ForwardResult<Real>& result, const BinaryMask& mask) {
  FusionState state;
  state.mask = mask;
  const std::size_t n = mask.rows(), m = mask.cols();
  const std::size_t d = result.modality_embeddings.empty() ? 0 : result.modality_embeddings[0].cols();
  state.stacked = Tensor<double>(Shape{n, m, d});
  for (std::size_t i = 0; i < m; ++i) {
    const auto& h = result.modality_embeddings[i].value();
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t c = 0; c < d; ++c) {
        state.stacked[(j * m + i) * d + c] = static_cast<double>(h(j, c));
      }
    }
  }
  for (const auto& a : result.attention) state.attention.push_back(a.value().template cast<double>());
  if (state.attention.empty()) {
    // Equal-weight fusion: report the implied uniform weights.
    Tensor<double> uniform(n, m);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        uniform(j, i) = mask(j, i) ? 1.0 / static_cast<double>(mask.row_count(j)) : 0.0;
      }
    }
    state.attention.push_back(std::move(uniform));
  }
  state.fused = result.fused.value().template cast<double>();
  return state;
}

#define MAGNET_INSTANTIATE_GNN(Real)                                                            \
  template ParameterSet<Real> init_parameters<Real>(const ModelSpec&, std::uint64_t);           \
  template Var<Real> sage_layer(Var<Real>, const NeighborLists&, Var<Real>, Var<Real>,          \
                                Var<Real>, bool);                                               \
  template Var<Real> decode(Tape<Real>&, const ParameterSet<Real>&, Var<Real>);                 \
  template Var<Real> decoder_only_forward(Tape<Real>&, const ParameterSet<Real>&, Var<Real>);   \
  template ForwardResult<Real> forward(Tape<Real>&, const ParameterSet<Real>&,                  \
                                       const ModelSpec&, const ModelInputs<Real>&,              \
                                       std::mt19937_64*);                                       \
  template FusionState capture_fusion_state(const ForwardResult<Real>&, const BinaryMask&);

MAGNET_INSTANTIATE_GNN(float)
MAGNET_INSTANTIATE_GNN(double)

}  // namespace magnet
