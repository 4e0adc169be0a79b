// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "magnet/csv.hpp"
#include "magnet/objective.hpp"

namespace magnet {

using nlohmann::json;

const char* precision_name(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& name) {
  if (name == "f32") return Precision::kF32;
  if (name == "f64") return Precision::kF64;
  throw ConfigError("unknown precision '" + name + "' (expected f32 or f64)");
}

namespace {

const char* similarity_name(SimilarityAggregation a) {
  return a == SimilarityAggregation::kMeanCosine ? "mean_cosine" : "concat_cosine";
}

SimilarityAggregation parse_similarity(const std::string& name) {
  if (name == "mean_cosine") return SimilarityAggregation::kMeanCosine;
  if (name == "concat_cosine") return SimilarityAggregation::kConcatCosine;
  throw ConfigError("unknown similarity '" + name + "'");
}

template <typename T>
T read_value(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

// ---- RunConfig ---------------------------------------------------------------

void RunConfig::validate() const {
  require_seed();
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (heads == 0 || embed_dim % heads != 0) {
    throw ConfigError("heads must divide embed_dim");
  }
  if (!(sparsity_rate >= 0.0 && sparsity_rate < 1.0)) throw ConfigError("sparsity_rate must lie in [0, 1)");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!std::isfinite(lambda) || lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must lie in (0, 1]");
  if (decay_every == 0) throw ConfigError("decay_every must be positive");
  if (range_checked) {
    if (embed_dim != 128 && embed_dim != 256) throw ConfigError("embed_dim must be 128 or 256");
    if (heads != 1 && heads != 2 && heads != 4 && heads != 8) {
      throw ConfigError("heads must be one of 1, 2, 4, 8");
    }
    if (sparsity_rate < 0.5 || sparsity_rate > 0.95) {
      throw ConfigError("sparsity_rate must lie in [0.50, 0.95]");
    }
    if (dropout > 0.3) throw ConfigError("dropout must lie in [0, 0.3]");
  }
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required");
  return *seed;
}

double RunConfig::lr_at(std::size_t epoch) const {
  return learning_rate * std::pow(lr_decay, static_cast<double>(epoch / decay_every));
}

ModelSpec RunConfig::model_spec(const std::vector<std::size_t>& input_dims,
                                std::size_t class_count) const {
  ModelSpec spec;
  spec.input_dims = input_dims;
  spec.class_count = class_count;
  spec.embed_dim = embed_dim;
  spec.heads = heads;
  spec.sage_layers = sage_layers;
  spec.dropout = dropout;
  spec.use_attention = !no_pmmha;
  spec.use_gnn = !no_gnn;
  spec.use_edge_features = !no_edge_feature;
  spec.fuse_transformed = fuse_transformed;
  return spec;
}

json RunConfig::to_json() const {
  json j;
  j["embed_dim"] = embed_dim;
  j["heads"] = heads;
  j["sage_layers"] = sage_layers;
  j["sparsity_rate"] = sparsity_rate;
  j["dropout"] = dropout;
  j["lambda"] = lambda;
  j["learning_rate"] = learning_rate;
  j["epochs"] = epochs;
  j["lr_decay"] = lr_decay;
  j["decay_every"] = decay_every;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["precision"] = precision_name(precision);
  j["no_pmmha"] = no_pmmha;
  j["no_gnn"] = no_gnn;
  j["no_edge_feature"] = no_edge_feature;
  j["no_kl"] = no_kl;
  j["no_reconnect"] = no_reconnect;
  j["merge_validation"] = merge_validation;
  j["range_checked"] = range_checked;
  j["fuse_transformed"] = fuse_transformed;
  j["preprocess"] = preprocess;
  j["similarity"] = similarity_name(similarity);
  return j;
}

RunConfig RunConfig::from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "embed_dim" || key == "d") {
      c.embed_dim = read_value<std::size_t>(value, key);
    } else if (key == "heads" || key == "K") {
      c.heads = read_value<std::size_t>(value, key);
    } else if (key == "sage_layers") {
      c.sage_layers = read_value<std::size_t>(value, key);
    } else if (key == "sparsity_rate") {
      c.sparsity_rate = read_value<double>(value, key);
    } else if (key == "dropout") {
      c.dropout = read_value<double>(value, key);
    } else if (key == "lambda") {
      c.lambda = read_value<double>(value, key);
    } else if (key == "learning_rate") {
      c.learning_rate = read_value<double>(value, key);
    } else if (key == "epochs") {
      c.epochs = read_value<std::size_t>(value, key);
    } else if (key == "lr_decay") {
      c.lr_decay = read_value<double>(value, key);
    } else if (key == "decay_every") {
      c.decay_every = read_value<std::size_t>(value, key);
    } else if (key == "seed") {
      if (value.is_null()) {
        c.seed.reset();
      } else {
        c.seed = read_value<std::uint64_t>(value, key);
      }
    } else if (key == "precision") {
      c.precision = parse_precision(read_value<std::string>(value, key));
    } else if (key == "no_pmmha") {
      c.no_pmmha = read_value<bool>(value, key);
    } else if (key == "no_gnn") {
      c.no_gnn = read_value<bool>(value, key);
    } else if (key == "no_edge_feature") {
      c.no_edge_feature = read_value<bool>(value, key);
    } else if (key == "no_kl") {
      c.no_kl = read_value<bool>(value, key);
    } else if (key == "no_reconnect") {
      c.no_reconnect = read_value<bool>(value, key);
    } else if (key == "merge_validation") {
      c.merge_validation = read_value<bool>(value, key);
    } else if (key == "range_checked") {
      c.range_checked = read_value<bool>(value, key);
    } else if (key == "fuse_transformed") {
      c.fuse_transformed = read_value<bool>(value, key);
    } else if (key == "preprocess") {
      c.preprocess = read_value<bool>(value, key);
    } else if (key == "similarity") {
      c.similarity = parse_similarity(read_value<std::string>(value, key));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return c;
}

RunConfig RunConfig::from_json(const json& j) { return from_json(j, RunConfig{}); }

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

// ---- Adam ----------------------------------------------------------------------

template <typename Real>
void adam_step(ParameterSet<Real>& params, const GradientMap<Real>& grads, AdamState<Real>& state,
               double lr) {
  const std::size_t count = params.size();
  if (state.m.empty()) {
    for (std::size_t i = 0; i < count; ++i) {
      state.m.emplace_back(params.at(i).shape());
      state.v.emplace_back(params.at(i).shape());
    }
  }
  if (state.m.size() != count) throw DimensionError("adam: state does not match parameters");
  std::vector<const Tensor<Real>*> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto it = grads.find(params.names()[i]);
    if (it == grads.end()) throw ContractError("adam: missing gradient for " + params.names()[i]);
    if (!it->second.same_shape(params.at(i)) || !state.m[i].same_shape(params.at(i))) {
      throw DimensionError("adam: shape mismatch for " + params.names()[i]);
    }
    if (!it->second.all_finite()) {
      throw NumericError("adam: non-finite gradient for " + params.names()[i]);
    }
    g[i] = &it->second;
  }
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < count; ++i) {
    auto p = params.at(i).data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    const auto gi = g[i]->data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = static_cast<double>(gi[k]);
      const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * gk;
      const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * gk * gk;
      m[k] = static_cast<Real>(mk);
      v[k] = static_cast<Real>(vk);
      const double update = lr * (mk / c1) / (std::sqrt(vk / c2) + state.eps);
      p[k] = static_cast<Real>(static_cast<double>(p[k]) - update);
    }
  }
}

template void adam_step(ParameterSet<float>&, const GradientMap<float>&, AdamState<float>&, double);
template void adam_step(ParameterSet<double>&, const GradientMap<double>&, AdamState<double>&, double);

// ---- Graph context and preprocessing -------------------------------------------

GraphContext build_graph_context(const MultiomicsDataset& ds, const SplitAssignment& split,
                                 const RunConfig& cfg) {
  if (split.tags.size() != ds.patient_count()) {
    throw DimensionError("split does not cover the dataset");
  }
  GraphContext ctx;
  ctx.sims = pairwise_similarity(ds, cfg.similarity);
  GraphBuildOptions opts;
  opts.sparsity_rate = cfg.sparsity_rate;
  opts.reconnect_isolated = !cfg.no_reconnect;
  ctx.full = build_graph(ds, ctx.sims, opts);
  ctx.train = inductive_filter(ctx.full, split, GraphMode::kTrain, cfg.merge_validation, ctx.sims,
                               !cfg.no_reconnect);
  return ctx;
}

MultiomicsDataset prepare_dataset(const MultiomicsDataset& ds, const SplitAssignment& split,
                                  const RunConfig& cfg, const PreprocessOptions& opts) {
  if (!cfg.preprocess) return ds;
  return preprocess(ds, split.train_side(cfg.merge_validation), opts);
}

// ---- Training --------------------------------------------------------------------

namespace {

template <typename Real>
std::vector<Tensor<Real>> gather_features(const MultiomicsDataset& ds,
                                          const std::vector<std::size_t>& ids) {
  std::vector<Tensor<Real>> out;
  out.reserve(ds.modality_count());
  for (const auto& x : ds.modalities) {
    Tensor<Real> t(ids.size(), x.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const auto src = x.row(ids[r]);
      auto dst = t.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] = static_cast<Real>(src[c]);
    }
    out.push_back(std::move(t));
  }
  return out;
}

Tensor<double> softmax_rows(const Tensor<double>& logits) {
  Tensor<double> p(logits.rows(), logits.cols());
  for (std::size_t j = 0; j < logits.rows(); ++j) {
    const auto row = logits.row(j);
    const double hi = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) total += (p(j, k) = std::exp(row[k] - hi));
    for (std::size_t k = 0; k < row.size(); ++k) p(j, k) /= total;
  }
  return p;
}

template <typename Real>
Tensor<Real> cast_tensor(const Tensor<double>& t) {
  return t.template cast<Real>();
}

// Reads the labels the loss is allowed to see and counts every access.
std::vector<int> read_training_labels(const MultiomicsDataset& ds, const SplitAssignment& split,
                                      const std::vector<std::size_t>& ids, ProtocolAudit& audit) {
  std::vector<int> y;
  y.reserve(ids.size());
  for (auto id : ids) {
    switch (split.tags[id]) {
      case SplitTag::kTest:
        ++audit.test_label_reads;
        break;
      case SplitTag::kValidation:
        ++audit.held_out_label_reads;
        break;
      case SplitTag::kTrain:
        ++audit.train_label_reads;
        break;
    }
    y.push_back(ds.labels[id]);
  }
  return y;
}

std::size_t count_crossing(const NeighborLists& lists, const std::vector<std::size_t>& ids,
                           const SplitAssignment& split, bool merge_validation) {
  std::size_t crossing = 0;
  for (std::size_t u = 0; u < lists.node_count; ++u) {
    const bool side = split.is_train_side(ids[u], merge_validation);
    for (std::size_t k = lists.offsets[u]; k < lists.offsets[u + 1]; ++k) {
      if (split.is_train_side(ids[lists.neighbors[k]], merge_validation) != side) ++crossing;
    }
  }
  return crossing;
}

template <typename Real>
TrainResult train_impl(const MultiomicsDataset& ds, const SplitAssignment& split, const RunConfig& cfg,
                       const GraphContext& graph, TrainReport& report) {
  const std::uint64_t seed = cfg.require_seed();
  const auto ids = split.train_side(cfg.merge_validation);
  if (ids.size() < 2) throw DataError("training needs at least two train-side patients");

  const ModelSpec spec = cfg.model_spec(ds.feature_dims(), static_cast<std::size_t>(ds.class_count));
  ParameterSet<Real> params = init_parameters<Real>(spec, seed);
  report.parameter_count = params.scalar_count();

  const auto features = gather_features<Real>(ds, ids);
  const BinaryMask mask = ds.mask.select_rows(ids);
  const NeighborLists lists = graph.train.neighbor_lists(ids, cfg.no_reconnect);
  const std::size_t crossing = count_crossing(lists, ids, split, cfg.merge_validation);
  const auto labels = read_training_labels(ds, split, ids, report.audit);

  const double lambda = cfg.effective_lambda();
  const SimilarityDistributions dist = build_P(graph.sims, ids);
  const Tensor<Real> p = cast_tensor<Real>(dist.p);
  const Tensor<Real> pair_mask = cast_tensor<Real>(dist.pair_mask);

  std::seed_seq dropout_seed{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                             0x64726f70u};
  std::mt19937_64 rng(dropout_seed);
  AdamState<Real> adam;
  ModelInputs<Real> inputs{features, &mask, &lists};

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at(epoch);
    Tape<Real> tape;
    auto out = forward(tape, params, spec, inputs, &rng);
    report.audit.crossing_edge_traversals += spec.use_gnn ? crossing * spec.sage_layers : 0;
    Var<Real> ce = ce_loss(out.logits, labels);
    Var<Real> kl = kl_loss(p, build_Q(out.fused, pair_mask));
    Var<Real> total = total_loss(ce, kl, lambda);
    EpochLoss row{epoch, static_cast<double>(ce.value().item()), static_cast<double>(kl.value().item()),
                  static_cast<double>(total.value().item()), lr};
    if (!std::isfinite(row.total)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": non-finite loss (ce=" + std::to_string(row.ce) +
                         ", kl=" + std::to_string(row.kl) + ")");
    }
    report.losses.push_back(row);
    adam_step(params, tape.backward(total), adam, lr);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return TrainResult{params.template cast<double>(), {}};
}

template <typename Real>
MetricsBundle evaluate_impl(const ParameterSet<double>& params64, const MultiomicsDataset& ds,
                            const SplitAssignment& split, const RunConfig& cfg, SplitTag tag,
                            EvalOutputs* outputs, const GraphContext& graph) {
  const ModelSpec spec = cfg.model_spec(ds.feature_dims(), static_cast<std::size_t>(ds.class_count));
  const ParameterSet<Real> params = params64.template cast<Real>();
  const auto expected = init_parameters<double>(spec, 0);
  for (const auto& name : expected.names()) {
    if (!params.contains(name)) throw ContractError("parameters lack '" + name + "' for this model");
  }

  std::vector<std::size_t> forward_ids;
  NeighborLists lists;
  if (tag == SplitTag::kTrain) {
    forward_ids = split.train_side(cfg.merge_validation);
    lists = graph.train.neighbor_lists(forward_ids, cfg.no_reconnect);
  } else {
    forward_ids.resize(ds.patient_count());
    for (std::size_t k = 0; k < forward_ids.size(); ++k) forward_ids[k] = k;
    lists = graph.full.neighbor_lists(forward_ids, cfg.no_reconnect);
  }
  const auto features = gather_features<Real>(ds, forward_ids);
  const BinaryMask mask = ds.mask.select_rows(forward_ids);
  Tape<Real> tape;
  const auto out = forward(tape, params, spec, ModelInputs<Real>{features, &mask, &lists}, nullptr);

  std::vector<std::size_t> rows;  // positions in forward_ids
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < forward_ids.size(); ++k) {
    if (split.tags[forward_ids[k]] == tag) {
      rows.push_back(k);
      ids.push_back(forward_ids[k]);
    }
  }
  if (ids.empty()) throw DataError(std::string("split '") + split_name(tag) + "' is empty");

  const Tensor<double> logits = out.logits.value().template cast<double>();
  const Tensor<double> z = out.node_embedding.value().template cast<double>();
  Tensor<double> probs(ids.size(), logits.cols());
  Tensor<double> emb(ids.size(), z.cols());
  std::vector<int> truth(ids.size());
  const Tensor<double> all_probs = softmax_rows(logits);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(all_probs.row(rows[r]).begin(), all_probs.row(rows[r]).end(), probs.row(r).begin());
    std::copy(z.row(rows[r]).begin(), z.row(rows[r]).end(), emb.row(r).begin());
    truth[r] = ds.labels[ids[r]];
  }
  MetricsBundle metrics = evaluate_predictions(truth, probs, &emb);
  if (outputs != nullptr) {
    const Tensor<double> fused = out.fused.value().template cast<double>();
    outputs->fused = Tensor<double>(ids.size(), fused.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy(fused.row(rows[r]).begin(), fused.row(rows[r]).end(), outputs->fused.row(r).begin());
    }
    outputs->ids = ids;
    outputs->probabilities = std::move(probs);
    outputs->embedding = std::move(emb);
    outputs->fusion = capture_fusion_state(out, mask);
    outputs->forward_ids = forward_ids;
    outputs->forward_embedding = z;
  }
  return metrics;
}

}  // namespace

TrainResult train(const MultiomicsDataset& ds, const SplitAssignment& split, const RunConfig& cfg,
                  const TrainOptions& opts) {
  cfg.validate();
  ds.validate();
  if (split.tags.size() != ds.patient_count()) throw DimensionError("split does not cover the dataset");
  std::optional<GraphContext> owned;
  if (opts.graph == nullptr) owned = build_graph_context(ds, split, cfg);
  const GraphContext& graph = opts.graph != nullptr ? *opts.graph : *owned;

  TrainReport report;
  report.config = cfg.to_json();
  report.full_edges = graph.full.edges.size();
  report.train_edges = graph.train.edges.size();
  report.threshold = graph.full.threshold;
  TrainResult result = cfg.precision == Precision::kF32
                           ? train_impl<float>(ds, split, cfg, graph, report)
                           : train_impl<double>(ds, split, cfg, graph, report);
  if (opts.evaluate_splits) {
    for (SplitTag tag : {SplitTag::kTrain, SplitTag::kValidation, SplitTag::kTest}) {
      if (split.count(tag) == 0) continue;
      report.metrics[split_name(tag)] = evaluate(result.params, ds, split, cfg, tag, nullptr, &graph);
    }
  }
  result.report = std::move(report);
  return result;
}

MetricsBundle evaluate(const ParameterSet<double>& params, const MultiomicsDataset& ds,
                       const SplitAssignment& split, const RunConfig& cfg, SplitTag tag,
                       EvalOutputs* outputs, const GraphContext* graph) {
  cfg.validate();
  if (split.tags.size() != ds.patient_count()) throw DimensionError("split does not cover the dataset");
  std::optional<GraphContext> owned;
  if (graph == nullptr) owned = build_graph_context(ds, split, cfg);
  const GraphContext& g = graph != nullptr ? *graph : *owned;
  return cfg.precision == Precision::kF32
             ? evaluate_impl<float>(params, ds, split, cfg, tag, outputs, g)
             : evaluate_impl<double>(params, ds, split, cfg, tag, outputs, g);
}

json TrainReport::to_json() const {
  json j;
  j["config"] = config;
  j["seconds"] = seconds;
  j["parameter_count"] = parameter_count;
  j["graph"] = {{"full_edges", full_edges}, {"train_edges", train_edges}, {"threshold", threshold}};
  j["audit"] = {{"test_label_reads", audit.test_label_reads},
                {"held_out_label_reads", audit.held_out_label_reads},
                {"train_label_reads", audit.train_label_reads},
                {"crossing_edge_traversals", audit.crossing_edge_traversals}};
  json losses_json = json::array();
  for (const auto& l : losses) {
    losses_json.push_back({{"epoch", l.epoch}, {"ce", l.ce}, {"kl", l.kl}, {"total", l.total}, {"lr", l.lr}});
  }
  j["losses"] = std::move(losses_json);
  json m = json::object();
  for (const auto& [name, bundle] : metrics) m[name] = bundle.to_json();
  j["metrics"] = std::move(m);
  j["exports"] = exports;
  return j;
}

void write_loss_log(const std::vector<EpochLoss>& losses, const std::filesystem::path& path) {
  CsvWriter w(path);
  w.row({"epoch", "ce", "kl", "total", "lr"});
  for (const auto& l : losses) {
    w.begin_row();
    w.cell(static_cast<long long>(l.epoch));
    w.cell(l.ce);
    w.cell(l.kl);
    w.cell(l.total);
    w.cell(l.lr);
    w.end_row();
  }
}

// ---- Harnesses ---------------------------------------------------------------------

std::size_t resolve_jobs(std::size_t requested) {
  std::size_t jobs = std::max<std::size_t>(1, requested);
  if (const char* cap = std::getenv("MAGNET_KIT_THREADS")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(cap, &end, 10);
    if (end != cap && v > 0) jobs = std::min<std::size_t>(jobs, static_cast<std::size_t>(v));
  }
  return jobs;
}

void run_parallel(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::min(resolve_jobs(jobs), std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<AblationRow> run_ablation(const MultiomicsDataset& ds, const SplitAssignment& split,
                                      const RunConfig& cfg, std::size_t jobs,
                                      bool include_no_reconnect) {
  cfg.validate();
  std::vector<std::pair<std::string, RunConfig>> variants;
  variants.emplace_back("full", cfg);
  RunConfig a1 = cfg;
  a1.no_pmmha = true;
  variants.emplace_back("no_pmmha", a1);
  RunConfig a2 = cfg;
  a2.no_gnn = true;
  variants.emplace_back("no_gnn", a2);
  RunConfig a3 = cfg;
  a3.no_edge_feature = true;
  variants.emplace_back("no_edge_feature", a3);
  RunConfig a4 = cfg;
  a4.no_kl = true;
  variants.emplace_back("no_kl", a4);
  if (include_no_reconnect) {
    RunConfig r = cfg;
    r.no_reconnect = true;
    variants.emplace_back("no_reconnect", r);
  }
  std::vector<AblationRow> rows(variants.size());
  run_parallel(variants.size(), jobs, [&](std::size_t i) {
    TrainOptions opts;
    opts.evaluate_splits = false;
    auto result = train(ds, split, variants[i].second, opts);
    rows[i].variant = variants[i].first;
    rows[i].test = evaluate(result.params, ds, split, variants[i].second, SplitTag::kTest);
    rows[i].parameter_count = result.report.parameter_count;
    rows[i].losses = std::move(result.report.losses);
  });
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  CsvWriter w(path);
  std::vector<std::string> header{"variant", "parameter_count"};
  for (const char* key : kMetricKeys) header.emplace_back(key);
  w.row(header);
  for (const auto& r : rows) {
    w.begin_row();
    w.cell(r.variant);
    w.cell(static_cast<long long>(r.parameter_count));
    for (const char* key : kMetricKeys) {
      const auto v = r.test.get(key);
      if (v && std::isfinite(*v)) {
        w.cell(*v);
      } else {
        w.cell("");
      }
    }
    w.end_row();
  }
}

std::vector<SweepRow> run_scenario_sweep(const MultiomicsDataset& base, ScenarioKind kind,
                                         const std::vector<double>& levels, std::size_t repeats,
                                         const RunConfig& cfg, std::size_t jobs,
                                         std::optional<std::size_t> intact_modality) {
  cfg.validate();
  if (repeats == 0) throw ConfigError("sweep: repeats must be positive");
  if (levels.empty()) throw ConfigError("sweep: at least one level is required");
  if (kind == ScenarioKind::kNone) throw ConfigError("sweep: a scenario kind is required");
  const std::uint64_t master = cfg.require_seed();
  for (double level : levels) {
    ScenarioSpec probe{kind, intact_modality, level, master};
    probe.validate(base.modality_count());
  }
  std::vector<SweepRow> rows(levels.size() * repeats);
  run_parallel(rows.size(), jobs, [&](std::size_t i) {
    const double level = levels[i / repeats];
    const std::size_t r = i % repeats;
    const std::uint64_t seed = master + r;
    ScenarioSpec spec{kind, intact_modality, level, seed};
    const MultiomicsDataset masked = apply_scenario(base, spec);
    const SplitAssignment split = split_dataset(masked, seed);
    RunConfig run = cfg;
    run.seed = seed;
    const MultiomicsDataset ds = prepare_dataset(masked, split, run);
    TrainOptions opts;
    opts.evaluate_splits = false;
    const GraphContext graph = build_graph_context(ds, split, run);
    opts.graph = &graph;
    const auto result = train(ds, split, run, opts);
    rows[i].level = level;
    rows[i].repeat = r;
    rows[i].metrics = evaluate(result.params, ds, split, run, SplitTag::kTest, nullptr, &graph);
  });
  return rows;
}

std::vector<SweepSummary> summarize_sweep(const std::vector<SweepRow>& rows) {
  std::vector<double> levels;
  for (const auto& r : rows) {
    if (std::find(levels.begin(), levels.end(), r.level) == levels.end()) levels.push_back(r.level);
  }
  std::vector<SweepSummary> out;
  for (double level : levels) {
    for (const char* key : kMetricKeys) {
      std::vector<double> values;
      for (const auto& r : rows) {
        if (r.level != level) continue;
        const auto v = r.metrics.get(key);
        if (v && std::isfinite(*v)) values.push_back(*v);
      }
      if (values.empty()) continue;
      SweepSummary s;
      s.level = level;
      s.metric = key;
      s.count = values.size();
      for (double v : values) s.mean += v;
      s.mean /= static_cast<double>(values.size());
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
      }
      out.push_back(s);
    }
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  CsvWriter w(path);
  w.row({"level", "repeat", "metric", "value"});
  for (const auto& r : rows) {
    for (const char* key : kMetricKeys) {
      w.begin_row();
      w.cell(r.level);
      w.cell(static_cast<long long>(r.repeat));
      w.cell(key);
      const auto v = r.metrics.get(key);
      if (v && std::isfinite(*v)) {
        w.cell(*v);
      } else {
        w.cell("");
      }
      w.end_row();
    }
  }
}

void write_sweep_summary_csv(const std::vector<SweepSummary>& rows,
                             const std::filesystem::path& path) {
  CsvWriter w(path);
  w.row({"level", "metric", "mean", "sd", "count"});
  for (const auto& s : rows) {
    w.begin_row();
    w.cell(s.level);
    w.cell(s.metric);
    w.cell(s.mean);
    w.cell(s.sd);
    w.cell(static_cast<long long>(s.count));
    w.end_row();
  }
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("fit_line: need two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DataError("fit_line: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::vector<BenchRow> run_scalability_bench(const BenchOptions& bench, const RunConfig& cfg,
                                            std::size_t jobs) {
  cfg.validate();
  if (bench.modality_counts.empty() || bench.repeats == 0) {
    throw ConfigError("bench: need at least one modality count and one repeat");
  }
  const std::uint64_t master = cfg.require_seed();
  std::vector<BenchRow> rows(bench.modality_counts.size() * bench.repeats);
  run_parallel(rows.size(), jobs, [&](std::size_t i) {
    const std::size_t m = bench.modality_counts[i / bench.repeats];
    const std::size_t r = i % bench.repeats;
    const std::uint64_t seed = master + r;
    ScalabilityGenOptions gen;
    gen.n = bench.patients;
    gen.modalities = m;
    gen.features = bench.features;
    gen.seed = seed;
    const MultiomicsDataset full = gen_scalability(gen);
    const MultiomicsDataset masked =
        apply_scenario(full, ScenarioSpec{ScenarioKind::kRandomMask, std::nullopt, bench.mask_probability, seed});
    const SplitAssignment split = split_dataset(masked, seed);
    RunConfig run = cfg;
    run.seed = seed;
    const MultiomicsDataset ds = prepare_dataset(masked, split, run);
    TrainOptions opts;
    opts.evaluate_splits = false;
    const auto result = train(ds, split, run, opts);
    rows[i] = BenchRow{m, r, result.report.seconds};
  });
  return rows;
}

LinearFit fit_bench(const std::vector<BenchRow>& rows) {
  std::map<std::size_t, std::pair<double, std::size_t>> by_m;
  for (const auto& r : rows) {
    auto& [sum, count] = by_m[r.modalities];
    sum += r.seconds;
    ++count;
  }
  std::vector<double> x, y;
  for (const auto& [m, acc] : by_m) {
    x.push_back(static_cast<double>(m));
    y.push_back(acc.first / static_cast<double>(acc.second));
  }
  return fit_line(x, y);
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  CsvWriter w(path);
  w.row({"M", "repeat", "seconds"});
  for (const auto& r : rows) {
    w.begin_row();
    w.cell(static_cast<long long>(r.modalities));
    w.cell(static_cast<long long>(r.repeat));
    w.cell(r.seconds);
    w.end_row();
  }
}

namespace {

std::vector<SensitivityRow> run_sensitivity(const MultiomicsDataset& ds, const SplitAssignment& split,
                                            const RunConfig& cfg, const std::string& parameter,
                                            const std::vector<double>& values, std::size_t jobs) {
  std::vector<SensitivityRow> rows(values.size());
  RunConfig base = cfg;
  base.merge_validation = false;
  base.validate();
  if (split.count(SplitTag::kValidation) == 0) throw DataError("sensitivity sweep: validation split is empty");
  run_parallel(values.size(), jobs, [&](std::size_t i) {
    RunConfig run = base;
    if (parameter == "lambda") {
      run.lambda = values[i];
    } else {
      run.sparsity_rate = values[i];
    }
    run.validate();
    TrainOptions opts;
    opts.evaluate_splits = false;
    // The graph is rebuilt for every point, so sparsity changes take effect.
    const GraphContext graph = build_graph_context(ds, split, run);
    opts.graph = &graph;
    const auto result = train(ds, split, run, opts);
    rows[i].parameter = parameter;
    rows[i].value = values[i];
    rows[i].validation = evaluate(result.params, ds, split, run, SplitTag::kValidation, nullptr, &graph);
  });
  return rows;
}

}  // namespace

std::vector<SensitivityRow> run_lambda_sweep(const MultiomicsDataset& ds, const SplitAssignment& split,
                                             const RunConfig& cfg, const std::vector<double>& lambdas,
                                             std::size_t jobs) {
  return run_sensitivity(ds, split, cfg, "lambda", lambdas, jobs);
}

std::vector<SensitivityRow> run_sparsity_sweep(const MultiomicsDataset& ds,
                                               const SplitAssignment& split, const RunConfig& cfg,
                                               const std::vector<double>& rates, std::size_t jobs) {
  return run_sensitivity(ds, split, cfg, "sparsity_rate", rates, jobs);
}

void write_sensitivity_csv(const std::vector<SensitivityRow>& rows,
                           const std::filesystem::path& path) {
  CsvWriter w(path);
  w.row({"parameter", "point", "metric", "value"});
  for (const auto& r : rows) {
    for (const char* key : kMetricKeys) {
      const auto v = r.validation.get(key);
      w.begin_row();
      w.cell(r.parameter);
      w.cell(r.value);
      w.cell(key);
      if (v && std::isfinite(*v)) {
        w.cell(*v);
      } else {
        w.cell("");
      }
      w.end_row();
    }
  }
}

}  // namespace magnet
