// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace magnet {
namespace {

template <typename Real>
using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
Eigen::Map<RowMatrix<Real>> as_matrix(Tensor<Real>& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.rows()),
          static_cast<Eigen::Index>(t.cols())};
}

template <typename Real>
Eigen::Map<const RowMatrix<Real>> as_matrix(const Tensor<Real>& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.rows()),
          static_cast<Eigen::Index>(t.cols())};
}

template <typename Real>
void require_rank2(const Tensor<Real>& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " +
                         shape_string(t.shape()));
  }
}

template <typename Real>
void require_same_shape(const Tensor<Real>& a, const Tensor<Real>& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

template <typename Real>
void require_same_tape(Var<Real> a, Var<Real> b) {
  if (a.tape != b.tape) throw ContractError("operands recorded on different tapes");
}

}  // namespace

// ---- ParameterSet ----------------------------------------------------------

template <typename Real>
void ParameterSet<Real>::add(const std::string& name, Tensor<Real> value) {
  if (index_.count(name)) throw ContractError("duplicate parameter '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(name);
  values_.push_back(std::move(value));
}

template <typename Real>
const Tensor<Real>& ParameterSet<Real>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return values_[it->second];
}

template <typename Real>
Tensor<Real>& ParameterSet<Real>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return values_[it->second];
}

template <typename Real>
std::size_t ParameterSet<Real>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

// ---- Tape ------------------------------------------------------------------

template <typename Real>
Var<Real> Tape<Real>::constant(Tensor<Real> value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false});
  grads_.emplace_back();
  return Var<Real>{this, nodes_.size() - 1};
}

template <typename Real>
Var<Real> Tape<Real>::parameter(const std::string& name, Tensor<Real> value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, true});
  grads_.emplace_back();
  params_.emplace_back(name, nodes_.size() - 1);
  return Var<Real>{this, nodes_.size() - 1};
}

template <typename Real>
Var<Real> Tape<Real>::bind(const ParameterSet<Real>& params, const std::string& name) {
  return parameter(name, params.get(name));
}

template <typename Real>
Var<Real> Tape<Real>::record(Tensor<Real> value, std::vector<std::size_t> inputs,
                             BackwardFn backward) {
  bool needs = false;
  for (auto id : inputs) {
    if (id >= nodes_.size()) throw ContractError("input node recorded later than its consumer");
    needs = needs || nodes_[id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), std::move(inputs),
                        needs ? std::move(backward) : BackwardFn{}, needs});
  grads_.emplace_back();
  return Var<Real>{this, nodes_.size() - 1};
}

template <typename Real>
Tensor<Real>& Tape<Real>::grad(std::size_t id) {
  if (grads_[id].empty() && !nodes_[id].value.empty()) {
    grads_[id] = Tensor<Real>(nodes_[id].value.shape());
  }
  return grads_[id];
}

template <typename Real>
GradientMap<Real> Tape<Real>::backward(Var<Real> loss) {
  if (loss.tape != this) throw ContractError("loss belongs to another tape");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward requires a scalar loss, got " +
                        shape_string(value(loss.id).shape()));
  }
  for (auto& g : grads_) g = Tensor<Real>();
  grad(loss.id)[0] = Real(1);
  for (std::size_t k = loss.id + 1; k-- > 0;) {
    if (!has_grad(k) || !nodes_[k].backward) continue;
    nodes_[k].backward(*this, k);
  }
  GradientMap<Real> out;
  for (const auto& [name, id] : params_) {
    Tensor<Real> g = has_grad(id) ? grads_[id] : Tensor<Real>(nodes_[id].value.shape());
    auto it = out.find(name);
    if (it == out.end()) {
      out.emplace(name, std::move(g));
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
    }
  }
  return out;
}

// ---- Operations ------------------------------------------------------------

template <typename Real>
Var<Real> matmul(Var<Real> a, Var<Real> b) {
  require_same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + shape_string(av.shape()) +
                         " * " + shape_string(bv.shape()));
  }
  Tensor<Real> out(av.rows(), bv.cols());
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) {
      as_matrix(t.grad(ia)).noalias() += as_matrix(g) * as_matrix(t.value(ib)).transpose();
    }
    if (t.requires_grad(ib)) {
      as_matrix(t.grad(ib)).noalias() += as_matrix(t.value(ia)).transpose() * as_matrix(g);
    }
  });
}

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor<Real> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t id : {ia, ib}) {
      if (!t.requires_grad(id)) continue;
      auto& dst = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  });
}

template <typename Real>
Var<Real> add_row_bias(Var<Real> a, Var<Real> bias) {
  require_same_tape(a, bias);
  const auto& av = a.value();
  const auto& bv = bias.value();
  require_rank2(av, "add_row_bias");
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw DimensionError("add_row_bias: bias " + shape_string(bv.shape()) +
                         " does not broadcast over " + shape_string(av.shape()));
  }
  Tensor<Real> out = av;
  const std::size_t n = av.cols();
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) out(r, c) += bv[c];
  }
  const std::size_t ia = a.id, ib = bias.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto& dst = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto& dst = t.grad(ib);
      const std::size_t n = g.cols();
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) dst[c] += g(r, c);
      }
    }
  });
}

template <typename Real>
Var<Real> scale(Var<Real> a, Real factor) {
  Tensor<Real> out = a.value();
  for (auto& v : out.data()) v *= factor;
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, factor](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& dst = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += factor * g[i];
  });
}

template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor<Real> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto& dst = t.grad(ia);
      const auto& bv = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      auto& dst = t.grad(ib);
      const auto& av = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * av[i];
    }
  });
}

template <typename Real>
Var<Real> mul_const(Var<Real> a, const Tensor<Real>& c) {
  require_same_shape(a.value(), c, "mul_const");
  Tensor<Real> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, c](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& dst = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * c[i];
  });
}

template <typename Real>
Var<Real> relu(Var<Real> a) {
  Tensor<Real> out = a.value();
  for (auto& v : out.data()) v = v > Real(0) ? v : Real(0);
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& x = t.value(ia);
    auto& dst = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > Real(0)) dst[i] += g[i];
    }
  });
}

template <typename Real>
Var<Real> mean_rows(Var<Real> a) {
  const auto& av = a.value();
  require_rank2(av, "mean_rows");
  const std::size_t m = av.rows(), n = av.cols();
  if (m == 0) throw DimensionError("mean_rows: no rows");
  Tensor<Real> out(1, n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[c] += av(r, c);
  }
  for (auto& v : out.data()) v /= static_cast<Real>(m);
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, m, n](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& dst = t.grad(ia);
    const Real inv = Real(1) / static_cast<Real>(m);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < n; ++c) dst(r, c) += g[c] * inv;
    }
  });
}

template <typename Real>
Var<Real> sum_all(Var<Real> a) {
  Real s = 0;
  for (Real v : a.value().data()) s += v;
  const std::size_t ia = a.id;
  return a.tape->record(Tensor<Real>::scalar(s), {ia}, [ia](Tape<Real>& t, std::size_t self) {
    const Real g = t.grad(self)[0];
    auto& dst = t.grad(ia);
    for (auto& v : dst.data()) v += g;
  });
}

template <typename Real>
Var<Real> concat_cols(std::span<const Var<Real>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape<Real>* tape = parts.front().tape;
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  std::vector<std::size_t> ids, widths;
  for (const auto& p : parts) {
    if (p.tape != tape) throw ContractError("operands recorded on different tapes");
    require_rank2(p.value(), "concat_cols");
    if (p.rows() != m) throw DimensionError("concat_cols: row counts differ");
    ids.push_back(p.id);
    widths.push_back(p.cols());
    total += p.cols();
  }
  Tensor<Real> out(m, total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t r = 0; r < m; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + offset);
    }
    offset += v.cols();
  }
  return tape->record(std::move(out), ids, [ids, widths](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) {
        auto& dst = t.grad(ids[k]);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < widths[k]; ++c) dst(r, c) += g(r, offset + c);
        }
      }
      offset += widths[k];
    }
  });
}

template <typename Real>
Var<Real> slice_cols(Var<Real> a, std::size_t begin, std::size_t count) {
  const auto& av = a.value();
  require_rank2(av, "slice_cols");
  if (begin + count > av.cols()) throw DimensionError("slice_cols: range out of bounds");
  Tensor<Real> out(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = av(r, begin + c);
  }
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, begin, count](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& dst = t.grad(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < count; ++c) dst(r, begin + c) += g(r, c);
    }
  });
}

template <typename Real>
Var<Real> gather_rows(Var<Real> a, std::span<const std::size_t> rows) {
  const auto& av = a.value();
  require_rank2(av, "gather_rows");
  const std::size_t n = av.cols();
  Tensor<Real> out(rows.size(), n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= av.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy(av.row(rows[r]).begin(), av.row(rows[r]).end(), out.row(r).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, idx, n](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& dst = t.grad(ia);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t c = 0; c < n; ++c) dst(idx[r], c) += g(r, c);
    }
  });
}

template <typename Real>
Var<Real> masked_softmax(Var<Real> logits, const BinaryMask& mask) {
  const auto& x = logits.value();
  require_rank2(x, "masked_softmax");
  if (mask.rows() != x.rows() || mask.cols() != x.cols()) {
    throw DimensionError("masked_softmax: mask shape does not match logits");
  }
  const std::size_t n = x.rows(), m = x.cols();
  Tensor<Real> out(n, m);
  for (std::size_t j = 0; j < n; ++j) {
    // Masked logits are never read: they behave as -inf without touching
    // their (possibly non-finite) values.
    Real hi = -std::numeric_limits<Real>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask(j, i)) {
        hi = std::max(hi, x(j, i));
        any = true;
      }
    }
    if (!any) {
      throw InvalidPatientError("masked_softmax: row " + std::to_string(j) +
                                " has no available entry");
    }
    Real total = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask(j, i)) {
        out(j, i) = std::exp(x(j, i) - hi);
        total += out(j, i);
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (mask(j, i)) out(j, i) /= total;
    }
  }
  const std::size_t ia = logits.id;
  return logits.tape->record(std::move(out), {ia}, [ia, mask](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& dst = t.grad(ia);
    for (std::size_t j = 0; j < y.rows(); ++j) {
      Real dot = 0;
      for (std::size_t i = 0; i < y.cols(); ++i) {
        if (mask(j, i)) dot += y(j, i) * g(j, i);
      }
      for (std::size_t i = 0; i < y.cols(); ++i) {
        if (mask(j, i)) dst(j, i) += y(j, i) * (g(j, i) - dot);
      }
    }
  });
}

template <typename Real>
Var<Real> attention_pool(Var<Real> weights, std::span<const Var<Real>> parts) {
  const auto& w = weights.value();
  require_rank2(w, "attention_pool");
  if (parts.size() != w.cols()) {
    throw DimensionError("attention_pool: weight columns must equal number of parts");
  }
  const std::size_t n = w.rows();
  const std::size_t d = parts.empty() ? 0 : parts.front().cols();
  std::vector<std::size_t> ids{weights.id};
  for (const auto& p : parts) {
    if (p.tape != weights.tape) throw ContractError("operands recorded on different tapes");
    if (p.rows() != n || p.cols() != d) throw DimensionError("attention_pool: part shape mismatch");
    ids.push_back(p.id);
  }
  Tensor<Real> out(n, d);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& h = parts[i].value();
    for (std::size_t j = 0; j < n; ++j) {
      const Real a = w(j, i);
      // Zero weights (missing modalities) contribute nothing, whatever the
      // part holds.
      if (a == Real(0)) continue;
      for (std::size_t c = 0; c < d; ++c) out(j, c) += a * h(j, c);
    }
  }
  return weights.tape->record(std::move(out), ids, [ids, n, d](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& w = t.value(ids[0]);
    const std::size_t m = ids.size() - 1;
    if (t.requires_grad(ids[0])) {
      auto& dw = t.grad(ids[0]);
      for (std::size_t i = 0; i < m; ++i) {
        const auto& h = t.value(ids[i + 1]);
        for (std::size_t j = 0; j < n; ++j) {
          Real dot = 0;
          for (std::size_t c = 0; c < d; ++c) dot += g(j, c) * h(j, c);
          dw(j, i) += dot;
        }
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!t.requires_grad(ids[i + 1])) continue;
      auto& dh = t.grad(ids[i + 1]);
      for (std::size_t j = 0; j < n; ++j) {
        const Real a = w(j, i);
        if (a == Real(0)) continue;
        for (std::size_t c = 0; c < d; ++c) dh(j, c) += a * g(j, c);
      }
    }
  });
}

template <typename Real>
Var<Real> neighbor_mean(Var<Real> z, const NeighborLists& adjacency, bool zero_edge_features) {
  const auto& zv = z.value();
  require_rank2(zv, "neighbor_mean");
  if (adjacency.node_count != zv.rows()) {
    throw DimensionError("neighbor_mean: graph has " + std::to_string(adjacency.node_count) +
                         " nodes but embedding has " + std::to_string(zv.rows()) + " rows");
  }
  const std::size_t n = zv.rows(), d = zv.cols();
  Tensor<Real> out(n, d + 1);
  for (std::size_t u = 0; u < n; ++u) {
    const std::size_t deg = adjacency.degree(u);
    if (deg == 0) {
      if (adjacency.allow_isolated) continue;
      throw ContractError("neighbor_mean: node " + std::to_string(u) + " is isolated");
    }
    auto row = out.row(u);
    Real edge_sum = 0;
    for (std::size_t k = adjacency.offsets[u]; k < adjacency.offsets[u + 1]; ++k) {
      const auto src = zv.row(adjacency.neighbors[k]);
      for (std::size_t c = 0; c < d; ++c) row[c] += src[c];
      edge_sum += static_cast<Real>(adjacency.edge_feature[k]);
    }
    const Real inv = Real(1) / static_cast<Real>(deg);
    for (std::size_t c = 0; c < d; ++c) row[c] *= inv;
    row[d] = zero_edge_features ? Real(0) : edge_sum * inv;
  }
  const std::size_t iz = z.id;
  // The adjacency is copied into the closure so the tape owns everything it
  // needs for the reverse sweep.
  return z.tape->record(std::move(out), {iz}, [iz, adjacency, d](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& dz = t.grad(iz);
    for (std::size_t u = 0; u < adjacency.node_count; ++u) {
      const std::size_t deg = adjacency.degree(u);
      if (deg == 0) continue;
      const Real inv = Real(1) / static_cast<Real>(deg);
      const auto gu = g.row(u);
      for (std::size_t k = adjacency.offsets[u]; k < adjacency.offsets[u + 1]; ++k) {
        auto dst = dz.row(adjacency.neighbors[k]);
        for (std::size_t c = 0; c < d; ++c) dst[c] += gu[c] * inv;
      }
    }
  });
}

template <typename Real>
Var<Real> squared_euclidean_pairwise(Var<Real> z) {
  const auto& zv = z.value();
  require_rank2(zv, "squared_euclidean_pairwise");
  const std::size_t n = zv.rows(), d = zv.cols();
  Tensor<Real> out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto zi = zv.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto zj = zv.row(j);
      Real s = 0;
      for (std::size_t c = 0; c < d; ++c) {
        const Real diff = zi[c] - zj[c];
        s += diff * diff;
      }
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  const std::size_t iz = z.id;
  return z.tape->record(std::move(out), {iz}, [iz, n, d](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& zv = t.value(iz);
    auto& dz = t.grad(iz);
    for (std::size_t i = 0; i < n; ++i) {
      const auto zi = zv.row(i);
      auto di = dz.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const Real w = Real(2) * (g(i, j) + g(j, i));
        if (w == Real(0)) continue;
        const auto zj = zv.row(j);
        for (std::size_t c = 0; c < d; ++c) di[c] += w * (zi[c] - zj[c]);
      }
    }
  });
}

template <typename Real>
Var<Real> student_t_kernel(Var<Real> sq_dist) {
  Tensor<Real> out = sq_dist.value();
  for (auto& v : out.data()) v = Real(1) / (Real(1) + v);
  const std::size_t ia = sq_dist.id;
  return sq_dist.tape->record(std::move(out), {ia}, [ia](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& dst = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] -= g[i] * y[i] * y[i];
  });
}

template <typename Real>
Var<Real> masked_normalize(Var<Real> a, const Tensor<Real>& pair_mask) {
  require_same_shape(a.value(), pair_mask, "masked_normalize");
  Tensor<Real> out = a.value();
  Real total = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = pair_mask[i] != Real(0) ? out[i] : Real(0);
    total += out[i];
  }
  if (!(total > Real(0))) throw NumericError("masked_normalize: non-positive total mass");
  for (auto& v : out.data()) v /= total;
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, pair_mask, total](Tape<Real>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    Real dot = 0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += y[i] * g[i];
    auto& dst = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (pair_mask[i] != Real(0)) dst[i] += (g[i] - dot) / total;
    }
  });
}

template <typename Real>
Var<Real> softmax_cross_entropy_sum(Var<Real> logits, std::span<const int> labels) {
  const auto& x = logits.value();
  require_rank2(x, "softmax_cross_entropy_sum");
  if (labels.size() != x.rows()) throw DimensionError("cross entropy: label count mismatch");
  const std::size_t n = x.rows(), c = x.cols();
  Tensor<Real> probs(n, c);
  Real loss = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (labels[j] < 0 || static_cast<std::size_t>(labels[j]) >= c) {
      throw DataError("cross entropy: label out of range");
    }
    const auto row = x.row(j);
    const Real hi = *std::max_element(row.begin(), row.end());
    Real total = 0;
    for (std::size_t k = 0; k < c; ++k) {
      probs(j, k) = std::exp(row[k] - hi);
      total += probs(j, k);
    }
    for (std::size_t k = 0; k < c; ++k) probs(j, k) /= total;
    loss += hi + std::log(total) - row[labels[j]];
  }
  std::vector<int> y(labels.begin(), labels.end());
  const std::size_t ia = logits.id;
  return logits.tape->record(
      Tensor<Real>::scalar(loss), {ia},
      [ia, y, probs = std::move(probs)](Tape<Real>& t, std::size_t self) {
        const Real g = t.grad(self)[0];
        auto& dst = t.grad(ia);
        for (std::size_t j = 0; j < probs.rows(); ++j) {
          for (std::size_t k = 0; k < probs.cols(); ++k) {
            const Real onehot = static_cast<int>(k) == y[j] ? Real(1) : Real(0);
            dst(j, k) += g * (probs(j, k) - onehot);
          }
        }
      });
}

template <typename Real>
Var<Real> kl_divergence(const Tensor<Real>& p, Var<Real> q, Real floor) {
  require_same_shape(p, q.value(), "kl_divergence");
  const auto& qv = q.value();
  Real total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > Real(0)) total += p[i] * (std::log(p[i]) - std::log(std::max(qv[i], floor)));
  }
  const std::size_t iq = q.id;
  return q.tape->record(Tensor<Real>::scalar(total), {iq}, [iq, p, floor](Tape<Real>& t, std::size_t self) {
    const Real g = t.grad(self)[0];
    const auto& qv = t.value(iq);
    auto& dst = t.grad(iq);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > Real(0) && qv[i] >= floor) dst[i] -= g * p[i] / qv[i];
    }
  });
}

#define MAGNET_INSTANTIATE_AUTODIFF(Real)                                              \
  template class ParameterSet<Real>;                                                   \
  template class Tape<Real>;                                                           \
  template Var<Real> matmul(Var<Real>, Var<Real>);                                     \
  template Var<Real> add(Var<Real>, Var<Real>);                                        \
  template Var<Real> add_row_bias(Var<Real>, Var<Real>);                               \
  template Var<Real> scale(Var<Real>, Real);                                           \
  template Var<Real> mul(Var<Real>, Var<Real>);                                        \
  template Var<Real> mul_const(Var<Real>, const Tensor<Real>&);                        \
  template Var<Real> relu(Var<Real>);                                                  \
  template Var<Real> mean_rows(Var<Real>);                                             \
  template Var<Real> sum_all(Var<Real>);                                               \
  template Var<Real> concat_cols(std::span<const Var<Real>>);                          \
  template Var<Real> slice_cols(Var<Real>, std::size_t, std::size_t);                  \
  template Var<Real> gather_rows(Var<Real>, std::span<const std::size_t>);             \
  template Var<Real> masked_softmax(Var<Real>, const BinaryMask&);                     \
  template Var<Real> attention_pool(Var<Real>, std::span<const Var<Real>>);            \
  template Var<Real> neighbor_mean(Var<Real>, const NeighborLists&, bool);             \
  template Var<Real> squared_euclidean_pairwise(Var<Real>);                            \
  template Var<Real> student_t_kernel(Var<Real>);                                      \
  template Var<Real> masked_normalize(Var<Real>, const Tensor<Real>&);                 \
  template Var<Real> softmax_cross_entropy_sum(Var<Real>, std::span<const int>);       \
  template Var<Real> kl_divergence(const Tensor<Real>&, Var<Real>, Real);

MAGNET_INSTANTIATE_AUTODIFF(float)
MAGNET_INSTANTIATE_AUTODIFF(double)

}  // namespace magnet
