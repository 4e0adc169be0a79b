// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Modality encoders and patient-modality attention fusion.
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "magnet/autodiff.hpp"
#include "magnet/layers.hpp"

namespace magnet {

// Two-layer encoder per modality: X -> ReLU(X W1 + b1) -> dropout -> W2 + b2.
// Parameters: enc<i>.w1, enc<i>.b1, enc<i>.w2, enc<i>.b2.
template <typename Real>
std::vector<Var<Real>> encode(Tape<Real>& tape, const ParameterSet<Real>& params,
                              std::span<const Tensor<Real>> features, const Dropout<Real>& dropout);

template <typename Real>
struct FusionOutput {
  Var<Real> z;
  std::vector<Var<Real>> attention;  // one N x M matrix per head
};

// Single head: T_i = H_i W_lin, logits(j, i) = <T_i[j], w_att>,
// A = masked_softmax(logits), Z = sum_i A(:, i) * T_i. With
// fuse_transformed == false the weighted sum runs over the raw H_i.
template <typename Real>
FusionOutput<Real> fuse_single_head(std::span<const Var<Real>> h, const BinaryMask& mask,
                                    Var<Real> w_lin, Var<Real> w_att,
                                    bool fuse_transformed = true);

// K heads over contiguous d/K channel slices of the transformed embeddings,
// each with its own attention vector; head outputs are concatenated and
// multiplied by w_out (d x d). Throws ConfigError unless K divides d.
template <typename Real>
FusionOutput<Real> fuse_multi_head(std::span<const Var<Real>> h, const BinaryMask& mask,
                                   Var<Real> w_lin, std::span<const Var<Real>> w_att,
                                   Var<Real> w_out, bool fuse_transformed = true);

// Mean of the available modality embeddings per patient.
template <typename Real>
Var<Real> equal_weight_fuse(std::span<const Var<Real>> h, const BinaryMask& mask);

// Snapshot of a fusion pass: stacked embeddings (N x M x d), per-head
// attention (N x M), fused embedding (N x d).
struct FusionState {
  Tensor<double> stacked;
  std::vector<Tensor<double>> attention;
  Tensor<double> fused;
  BinaryMask mask;
};

struct AttentionRow {
  std::string patient_id;
  std::size_t head = 0;
  std::string modality;
  double weight = 0.0;
};

// One row per (patient, head, modality); missing modalities report 0.
std::vector<AttentionRow> export_attention(const FusionState& state,
                                           const std::vector<std::string>& patient_ids,
                                           const std::vector<std::string>& modality_names);

// CSV `patient_id,head,modality,weight`, weights with 6 decimals.
void write_attention_csv(const std::vector<AttentionRow>& rows, const std::filesystem::path& path);

}  // namespace magnet
