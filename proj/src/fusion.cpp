// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/fusion.hpp"

#include "magnet/csv.hpp"

namespace magnet {

template <typename Real>
std::vector<Var<Real>> encode(Tape<Real>& tape, const ParameterSet<Real>& params,
                              std::span<const Tensor<Real>> features, const Dropout<Real>& dropout) {
  std::vector<Var<Real>> out;
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::string p = "enc" + std::to_string(i);
    if (params.get(p + ".w1").rows() != features[i].cols()) {
      throw DimensionError("encode: modality " + std::to_string(i) + " has " +
                           std::to_string(features[i].cols()) + " features, encoder expects " +
                           std::to_string(params.get(p + ".w1").rows()));
    }
    Var<Real> x = tape.constant(features[i]);
    Var<Real> hidden = relu(linear(tape, params, p + ".w1", x, p + ".b1"));
    hidden = dropout(hidden);
    out.push_back(linear(tape, params, p + ".w2", hidden, p + ".b2"));
  }
  return out;
}

namespace {

template <typename Real>
void check_fusion_inputs(std::span<const Var<Real>> h, const BinaryMask& mask) {
  if (h.empty()) throw DimensionError("fusion: no modality embedding");
  if (mask.cols() != h.size()) throw DimensionError("fusion: mask width differs from modality count");
  for (const auto& hi : h) {
    if (hi.rows() != mask.rows() || hi.cols() != h.front().cols()) {
      throw DimensionError("fusion: modality embeddings must share shape N x d");
    }
  }
  mask.validate();
}

}  // namespace

template <typename Real>
FusionOutput<Real> fuse_multi_head(std::span<const Var<Real>> h, const BinaryMask& mask,
                                   Var<Real> w_lin, std::span<const Var<Real>> w_att,
                                   Var<Real> w_out, bool fuse_transformed) {
  check_fusion_inputs(h, mask);
  const std::size_t d = h.front().cols();
  const std::size_t heads = w_att.size();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("fusion: head count " + std::to_string(heads) + " does not divide d=" +
                      std::to_string(d));
  }
  const std::size_t dh = d / heads;
  if (w_lin.rows() != d || w_lin.cols() != d) throw DimensionError("fusion: W_lin must be d x d");

  std::vector<Var<Real>> transformed;
  for (const auto& hi : h) transformed.push_back(matmul(hi, w_lin));

  FusionOutput<Real> out;
  std::vector<Var<Real>> head_outputs;
  for (std::size_t k = 0; k < heads; ++k) {
    if (w_att[k].rows() != dh || w_att[k].cols() != 1) {
      throw DimensionError("fusion: attention vector must be d_h x 1");
    }
    std::vector<Var<Real>> scored, pooled, logit_cols;
    for (std::size_t i = 0; i < h.size(); ++i) {
      scored.push_back(heads == 1 ? transformed[i] : slice_cols(transformed[i], k * dh, dh));
      if (fuse_transformed) {
        pooled.push_back(scored.back());
      } else {
        pooled.push_back(heads == 1 ? h[i] : slice_cols(h[i], k * dh, dh));
      }
      logit_cols.push_back(matmul(scored.back(), w_att[k]));
    }
    Var<Real> logits = concat_cols<Real>(logit_cols);
    Var<Real> attention = masked_softmax(logits, mask);
    out.attention.push_back(attention);
    head_outputs.push_back(attention_pool<Real>(attention, pooled));
  }
  Var<Real> joined = heads == 1 ? head_outputs.front() : concat_cols<Real>(head_outputs);
  out.z = matmul(joined, w_out);
  return out;
}

template <typename Real>
FusionOutput<Real> fuse_single_head(std::span<const Var<Real>> h, const BinaryMask& mask,
                                    Var<Real> w_lin, Var<Real> w_att, bool fuse_transformed) {
  check_fusion_inputs(h, mask);
  const std::size_t d = h.front().cols();
  if (w_lin.rows() != d || w_lin.cols() != d) throw DimensionError("fusion: W_lin must be d x d");
  if (w_att.rows() != d || w_att.cols() != 1) throw DimensionError("fusion: w_att must be d x 1");
  std::vector<Var<Real>> transformed, logit_cols;
  for (const auto& hi : h) {
    transformed.push_back(matmul(hi, w_lin));
    logit_cols.push_back(matmul(transformed.back(), w_att));
  }
  FusionOutput<Real> out;
  Var<Real> attention = masked_softmax(concat_cols<Real>(logit_cols), mask);
  out.attention.push_back(attention);
  out.z = attention_pool<Real>(attention, fuse_transformed ? std::span<const Var<Real>>(transformed) : h);
  return out;
}

template <typename Real>
Var<Real> equal_weight_fuse(std::span<const Var<Real>> h, const BinaryMask& mask) {
  check_fusion_inputs(h, mask);
  Tensor<Real> weights(mask.rows(), mask.cols());
  for (std::size_t j = 0; j < mask.rows(); ++j) {
    const Real share = Real(1) / static_cast<Real>(mask.row_count(j));
    for (std::size_t i = 0; i < mask.cols(); ++i) weights(j, i) = mask(j, i) ? share : Real(0);
  }
  Tape<Real>& tape = *h.front().tape;
  return attention_pool<Real>(tape.constant(std::move(weights)), h);
}

std::vector<AttentionRow> export_attention(const FusionState& state,
                                           const std::vector<std::string>& patient_ids,
                                           const std::vector<std::string>& modality_names) {
  std::vector<AttentionRow> rows;
  for (std::size_t j = 0; j < state.mask.rows(); ++j) {
    for (std::size_t k = 0; k < state.attention.size(); ++k) {
      for (std::size_t i = 0; i < state.mask.cols(); ++i) {
        AttentionRow r;
        r.patient_id = j < patient_ids.size() ? patient_ids[j] : std::to_string(j);
        r.head = k;
        r.modality = i < modality_names.size() ? modality_names[i] : std::to_string(i);
        r.weight = state.mask(j, i) ? state.attention[k](j, i) : 0.0;
        rows.push_back(std::move(r));
      }
    }
  }
  return rows;
}

void write_attention_csv(const std::vector<AttentionRow>& rows, const std::filesystem::path& path) {
  CsvWriter w(path);
  w.row({"patient_id", "head", "modality", "weight"});
  for (const auto& r : rows) {
    w.begin_row();
    w.cell(r.patient_id);
    w.cell(static_cast<long long>(r.head));
    w.cell(r.modality);
    w.cell_fixed(r.weight, 6);
    w.end_row();
  }
}

#define MAGNET_INSTANTIATE_FUSION(Real)                                                          \
  template std::vector<Var<Real>> encode(Tape<Real>&, const ParameterSet<Real>&,                 \
                                         std::span<const Tensor<Real>>, const Dropout<Real>&);   \
  template FusionOutput<Real> fuse_single_head(std::span<const Var<Real>>, const BinaryMask&,    \
                                               Var<Real>, Var<Real>, bool);                      \
  template FusionOutput<Real> fuse_multi_head(std::span<const Var<Real>>, const BinaryMask&,     \
                                              Var<Real>, std::span<const Var<Real>>, Var<Real>,  \
                                              bool);                                             \
  template Var<Real> equal_weight_fuse(std::span<const Var<Real>>, const BinaryMask&);

MAGNET_INSTANTIATE_FUSION(float)
MAGNET_INSTANTIATE_FUSION(double)

}  // namespace magnet
