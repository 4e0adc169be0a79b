// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// magnet: data generation, training, evaluation, sweeps, benchmarks and
// graph diagnostics. Exit codes: 0 ok, 1 other failure, 2 config error,
// 3 numeric divergence.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "magnet/csv.hpp"
#include "magnet/serialize.hpp"
#include "magnet/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace magnet;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string dataset;
  std::string precision;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
  std::optional<double> lambda;
  std::optional<double> sparsity;
  std::optional<double> dropout;
  std::optional<std::size_t> embed_dim;
  std::optional<std::size_t> heads;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_dataset = true) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "master seed (required unless set in the config)");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  if (with_dataset) cmd->add_option("--dataset", o.dataset, "dataset bundle directory");
  cmd->add_option("--precision", o.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--lr", o.learning_rate, "initial learning rate");
  cmd->add_option("--lambda", o.lambda, "KL weight");
  cmd->add_option("--sparsity", o.sparsity, "graph sparsity rate");
  cmd->add_option("--dropout", o.dropout, "dropout rate");
  cmd->add_option("--embed-dim", o.embed_dim, "embedding width d");
  cmd->add_option("--heads", o.heads, "attention heads K");
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.precision.empty()) cfg.precision = parse_precision(o.precision);
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.learning_rate) cfg.learning_rate = *o.learning_rate;
  if (o.lambda) cfg.lambda = *o.lambda;
  if (o.sparsity) cfg.sparsity_rate = *o.sparsity;
  if (o.dropout) cfg.dropout = *o.dropout;
  if (o.embed_dim) cfg.embed_dim = *o.embed_dim;
  if (o.heads) cfg.heads = *o.heads;
  cfg.validate();
  return cfg;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const double v = parse_cell(item, "command line");
    if (!std::isfinite(v)) throw ConfigError("cannot parse list value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty value list");
  return out;
}

// "2-10" or "2,4,6".
std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  const auto dash = text.find('-');
  if (dash != std::string::npos) {
    const auto lo = std::stoul(text.substr(0, dash));
    const auto hi = std::stoul(text.substr(dash + 1));
    if (lo > hi) throw ConfigError("bad range '" + text + "'");
    for (auto m = lo; m <= hi; ++m) out.push_back(m);
    return out;
  }
  for (double v : parse_list(text)) {
    if (v < 1 || v != std::floor(v)) throw ConfigError("modality counts must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

MultiomicsDataset require_dataset(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--dataset is required");
  return load_bundle(dir);
}

json dataset_checksums(const fs::path& dir) {
  json sums = json::object();
  if (dir.empty()) return sums;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      sums[entry.path().filename().string()] = sha256_file(entry.path());
    }
  }
  return sums;
}

json run_manifest(const std::string& command, const RunConfig& cfg, const std::string& dataset) {
  json m;
  m["kind"] = "run";
  m["command"] = command;
  m["config"] = cfg.to_json();
  m["seed"] = cfg.require_seed();
  m["dataset"] = dataset.empty() ? json(nullptr) : json(fs::absolute(dataset).string());
  m["dataset_checksums"] = dataset_checksums(dataset);
  return m;
}

void write_embedding_csv(const MultiomicsDataset& ds, const EvalOutputs& out, const fs::path& path) {
  CsvWriter w(path);
  std::vector<std::string> header{"patient_id"};
  for (std::size_t c = 0; c < out.forward_embedding.cols(); ++c) header.push_back("z_" + std::to_string(c + 1));
  w.row(header);
  for (std::size_t r = 0; r < out.forward_ids.size(); ++r) {
    w.begin_row();
    w.cell(ds.patient_ids[out.forward_ids[r]]);
    for (double v : out.forward_embedding.row(r)) w.cell(v);
    w.end_row();
  }
}

// ---- gen -----------------------------------------------------------------------

struct GenOptions {
  std::string preset = "intersim-like";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "data";
  std::size_t modalities = 0;
  std::size_t patients = 0;
  std::string scenario = "none";
  double ratio = 0.0;
  std::optional<std::size_t> intact;
};

int cmd_gen(const GenOptions& o) {
  if (!o.seed_set) throw ConfigError("--seed is required");
  MultiomicsDataset ds;
  json extra;
  if (o.preset == "intersim-like") {
    ClusterGenOptions g;
    g.seed = o.seed;
    if (o.patients > 0) g.n = o.patients;
    if (o.modalities > 0) {
      g.dims.assign(o.modalities, 100);
    }
    ds = gen_clusters(g);
    extra["generator"] = {{"preset", o.preset}, {"n", g.n}, {"clusters", g.clusters}, {"dims", g.dims},
                          {"cluster_sep", g.cluster_sep}, {"noise_sd", g.noise_sd}, {"seed", o.seed}};
  } else if (o.preset == "scalability") {
    ScalabilityGenOptions g;
    g.seed = o.seed;
    if (o.patients > 0) g.n = o.patients;
    if (o.modalities > 0) g.modalities = o.modalities;
    ds = gen_scalability(g);
    extra["generator"] = {{"preset", o.preset}, {"n", g.n}, {"modalities", g.modalities},
                          {"features", g.features}, {"seed", o.seed}};
  } else {
    throw ConfigError("unknown preset '" + o.preset + "'");
  }
  const ScenarioKind kind = parse_scenario(o.scenario);
  if (kind != ScenarioKind::kNone || o.ratio != 0.0) {
    ScenarioSpec spec{kind, o.intact, o.ratio, o.seed};
    ds = apply_scenario(ds, spec);
    extra["scenario"] = {{"kind", o.scenario}, {"ratio", o.ratio}, {"seed", o.seed}};
  }
  save_bundle(ds, o.out, extra.dump());
  std::vector<std::string> files{"labels.csv"};
  for (const auto& name : ds.modality_names) files.push_back(name + ".csv");
  write_manifest(o.out, read_json(fs::path(o.out) / "manifest.json"), files);
  std::cout << "wrote " << ds.modality_count() << " modalities x " << ds.patient_count()
            << " patients to " << o.out << '\n';
  return 0;
}

// ---- train / eval ------------------------------------------------------------------

int cmd_train(const CommonOptions& o, bool json_params) {
  const RunConfig cfg = resolve_config(o);
  const MultiomicsDataset raw = require_dataset(o.dataset);
  const SplitAssignment split = split_dataset(raw, cfg.require_seed());
  const MultiomicsDataset ds = prepare_dataset(raw, split, cfg);
  const fs::path out(o.out);
  fs::create_directories(out);

  const GraphContext graph = build_graph_context(ds, split, cfg);
  TrainOptions opts;
  opts.graph = &graph;
  TrainResult result = train(ds, split, cfg, opts);

  save_parameters(result.params, out / "params.bin");
  if (json_params) write_json(parameters_to_json(result.params), out / "params.json");
  write_loss_log(result.report.losses, out / "loss_log.csv");
  write_edge_list(graph.full, out / "edges.csv", ds.patient_ids);

  EvalOutputs eval;
  const MetricsBundle test = evaluate(result.params, ds, split, cfg, SplitTag::kTest, &eval, &graph);
  std::vector<std::string> ids;
  for (auto id : eval.forward_ids) ids.push_back(ds.patient_ids[id]);
  write_attention_csv(export_attention(eval.fusion, ids, ds.modality_names), out / "attention.csv");
  write_embedding_csv(ds, eval, out / "Z_final.csv");
  write_json(test.to_json(), out / "metrics.json");

  result.report.exports = {{"params", "params.bin"},     {"loss_log", "loss_log.csv"},
                           {"attention", "attention.csv"}, {"embedding", "Z_final.csv"},
                           {"edges", "edges.csv"},       {"metrics", "metrics.json"}};
  write_json(result.report.to_json(), out / "report.json");
  write_manifest(out, run_manifest("train", cfg, o.dataset),
                 {"params.bin", "params.json", "loss_log.csv", "edges.csv", "attention.csv", "Z_final.csv",
                  "metrics.json", "report.json"});
  std::cout << "test " << test.to_json().dump() << '\n';
  return 0;
}

int cmd_eval(const std::string& params_path, const std::string& split_text, const std::string& dataset_opt,
             const std::string& out_dir) {
  if (params_path.empty()) throw ConfigError("--params is required");
  const fs::path params_file(params_path);
  const fs::path manifest_path = params_file.parent_path() / "manifest.json";
  if (!fs::exists(manifest_path)) throw ConfigError("no manifest.json next to " + params_path);
  const json manifest = read_json(manifest_path);
  const RunConfig cfg = RunConfig::from_json(manifest.at("config"));
  cfg.validate();
  std::string dataset = dataset_opt;
  if (dataset.empty()) {
    if (!manifest.contains("dataset") || manifest["dataset"].is_null()) {
      throw ConfigError("--dataset is required (the manifest names none)");
    }
    dataset = manifest["dataset"].get<std::string>();
  }
  const auto sums = manifest.value("artifacts", json::object());
  const std::string name = params_file.filename().string();
  if (sums.contains(name) && sums[name].get<std::string>() != sha256_file(params_file)) {
    std::cerr << "warning: " << name << " does not match the checksum in its manifest\n";
  }
  const ParameterSet<double> params = params_file.extension() == ".json"
                                          ? parameters_from_json(read_json(params_file))
                                          : load_parameters(params_file);
  const MultiomicsDataset raw = require_dataset(dataset);
  const SplitAssignment split = split_dataset(raw, cfg.require_seed());
  const MultiomicsDataset ds = prepare_dataset(raw, split, cfg);
  const SplitTag tag = parse_split(split_text);
  const MetricsBundle m = evaluate(params, ds, split, cfg, tag);
  json doc = m.to_json();
  doc["split"] = split_name(tag);
  std::cout << doc.dump(2) << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const std::string file = std::string("metrics_") + split_name(tag) + ".json";
    write_json(doc, fs::path(out_dir) / file);
    json body = run_manifest("eval", cfg, dataset);
    body["params"] = fs::absolute(params_file).string();
    body["split"] = split_name(tag);
    write_manifest(out_dir, body, {file});
  }
  return 0;
}

// ---- sweep / bench / ablate / graph-stats -------------------------------------------

MultiomicsDataset dataset_or_preset(const std::string& dir, std::uint64_t seed) {
  if (!dir.empty()) return load_bundle(dir);
  ClusterGenOptions g;
  g.seed = seed;
  return gen_clusters(g);
}

int cmd_sweep(const CommonOptions& o, const std::string& scenario, const std::string& levels_text,
              std::size_t repeats, std::size_t jobs, const std::string& sensitivity,
              std::optional<std::size_t> intact) {
  const RunConfig cfg = resolve_config(o);
  const MultiomicsDataset base = dataset_or_preset(o.dataset, cfg.require_seed());
  const fs::path out(o.out);
  fs::create_directories(out);
  json body = run_manifest("sweep", cfg, o.dataset);
  if (!sensitivity.empty()) {
    const auto values = parse_list(levels_text);
    const SplitAssignment split = split_dataset(base, cfg.require_seed());
    RunConfig held = cfg;
    held.merge_validation = false;
    const MultiomicsDataset ds = prepare_dataset(base, split, held);
    std::vector<SensitivityRow> rows;
    if (sensitivity == "lambda") {
      rows = run_lambda_sweep(ds, split, cfg, values, jobs);
    } else if (sensitivity == "sparsity") {
      rows = run_sparsity_sweep(ds, split, cfg, values, jobs);
    } else {
      throw ConfigError("unknown sensitivity parameter '" + sensitivity + "'");
    }
    write_sensitivity_csv(rows, out / "sensitivity.csv");
    body["sensitivity"] = {{"parameter", sensitivity}, {"values", values}};
    write_manifest(out, body, {"sensitivity.csv"});
    std::cout << "wrote " << rows.size() << " sensitivity points to " << (out / "sensitivity.csv") << '\n';
    return 0;
  }
  const ScenarioKind kind = parse_scenario(scenario);
  const auto levels = parse_list(levels_text);
  const auto rows = run_scenario_sweep(base, kind, levels, repeats, cfg, jobs, intact);
  const auto summary = summarize_sweep(rows);
  write_sweep_csv(rows, out / "sweep.csv");
  write_sweep_summary_csv(summary, out / "sweep_summary.csv");
  body["sweep"] = {{"scenario", scenario}, {"levels", levels}, {"repeats", repeats}};
  write_manifest(out, body, {"sweep.csv", "sweep_summary.csv"});
  for (const auto& s : summary) {
    if (s.metric == "macro_f1") {
      std::cout << "level " << s.level << " macro_f1 " << s.mean << " +- " << s.sd << '\n';
    }
  }
  return 0;
}

int cmd_bench(const CommonOptions& o, const std::string& modalities, std::size_t repeats, double mask_p,
              std::size_t jobs, std::size_t patients) {
  CommonOptions with_default = o;
  if (with_default.precision.empty()) with_default.precision = "f32";
  const RunConfig cfg = resolve_config(with_default);
  BenchOptions bench;
  bench.modality_counts = parse_counts(modalities);
  bench.repeats = repeats;
  bench.mask_probability = mask_p;
  if (patients > 0) bench.patients = patients;
  const auto rows = run_scalability_bench(bench, cfg, jobs);
  const fs::path out(o.out);
  fs::create_directories(out);
  write_bench_csv(rows, out / "bench.csv");
  json fit_json = nullptr;
  if (bench.modality_counts.size() >= 2) {
    const LinearFit fit = fit_bench(rows);
    fit_json = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
    std::cout << "slope " << fit.slope << " s/modality, R^2 " << fit.r_squared << '\n';
  }
  write_json({{"fit", fit_json}, {"rows", rows.size()}}, out / "bench_fit.json");
  json body = run_manifest("bench", cfg, "");
  body["bench"] = {{"modalities", bench.modality_counts}, {"repeats", repeats}, {"mask_probability", mask_p},
                   {"patients", bench.patients}, {"features", bench.features}};
  write_manifest(out, body, {"bench.csv", "bench_fit.json"});
  return 0;
}

int cmd_ablate(const CommonOptions& o, std::size_t jobs, bool no_reconnect) {
  const RunConfig cfg = resolve_config(o);
  const MultiomicsDataset raw = dataset_or_preset(o.dataset, cfg.require_seed());
  const SplitAssignment split = split_dataset(raw, cfg.require_seed());
  const MultiomicsDataset ds = prepare_dataset(raw, split, cfg);
  const auto rows = run_ablation(ds, split, cfg, jobs, no_reconnect);
  const fs::path out(o.out);
  fs::create_directories(out);
  write_ablation_csv(rows, out / "ablation.csv");
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"variant", r.variant}, {"parameter_count", r.parameter_count}, {"test", r.test.to_json()}});
    std::cout << r.variant << " macro_f1 " << r.test.macro_f1 << " accuracy " << r.test.accuracy << '\n';
  }
  write_json(table, out / "ablation.json");
  write_manifest(out, run_manifest("ablate", cfg, o.dataset), {"ablation.csv", "ablation.json"});
  return 0;
}

json homophily_json(const HomophilyStats& h) {
  return {{"node_homophily", h.node_homophily},
          {"edge_homophily", h.edge_homophily},
          {"random_baseline", h.random_baseline}};
}

json degree_json(const DegreeStats& d) {
  json hist = json::object();
  for (const auto& [deg, count] : d.histogram) hist[std::to_string(deg)] = count;
  return {{"min", d.min}, {"max", d.max}, {"mean", d.mean}, {"histogram", hist}};
}

int cmd_graph_stats(CommonOptions o, const std::string& run_dir) {
  if (!run_dir.empty()) {
    const json manifest = read_json(fs::path(run_dir) / "manifest.json");
    if (o.config.empty()) {
      const fs::path tmp = fs::path(o.out) / "resolved_config.json";
      fs::create_directories(o.out);
      write_json(manifest.at("config"), tmp);
      o.config = tmp.string();
    }
    if (o.dataset.empty() && manifest.contains("dataset") && !manifest["dataset"].is_null()) {
      o.dataset = manifest["dataset"].get<std::string>();
    }
  }
  const RunConfig cfg = resolve_config(o);
  const MultiomicsDataset raw = require_dataset(o.dataset);
  const SplitAssignment split = split_dataset(raw, cfg.require_seed());
  const MultiomicsDataset ds = prepare_dataset(raw, split, cfg);
  const GraphContext graph = build_graph_context(ds, split, cfg);
  std::size_t reconnections = 0;
  for (const auto& e : graph.full.edges) reconnections += e.reconnection ? 1 : 0;
  const auto train_ids = split.train_side(cfg.merge_validation);
  json doc;
  doc["nodes"] = ds.patient_count();
  doc["edges"] = graph.full.edges.size();
  doc["reconnection_edges"] = reconnections;
  doc["threshold"] = graph.full.threshold;
  doc["isolated_before_reconnection"] = graph.full.isolated_before_reconnection;
  doc["train_mode_edges"] = graph.train.edges.size();
  doc["homophily"] = homophily_json(homophily(graph.full, ds.labels));
  doc["train_mode_homophily"] = homophily_json(homophily(graph.train, ds.labels, train_ids));
  doc["degree"] = degree_json(degree_stats(graph.full));
  const fs::path out(o.out);
  fs::create_directories(out);
  write_json(doc, out / "graph_stats.json");
  write_edge_list(graph.full, out / "edges.csv", ds.patient_ids);
  write_manifest(out, run_manifest("graph-stats", cfg, o.dataset), {"graph_stats.json", "edges.csv"});
  std::cout << doc["homophily"].dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magnet: missingness-aware multimodal patient classification"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset bundle");
  gen_cmd->add_option("--preset", gen.preset, "intersim-like or scalability")
      ->check(CLI::IsMember({"intersim-like", "scalability"}))
      ->capture_default_str();
  gen_cmd->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) {
    gen.seed = s;
    gen.seed_set = true;
  }, "generator seed");
  gen_cmd->add_option("--out", gen.out, "output directory")->capture_default_str();
  gen_cmd->add_option("--modalities", gen.modalities, "number of modalities");
  gen_cmd->add_option("--patients", gen.patients, "number of patients");
  gen_cmd->add_option("--scenario", gen.scenario, "none, intact_one, shared_core or random_mask");
  gen_cmd->add_option("--ratio", gen.ratio, "missingness ratio for --scenario");
  gen_cmd->add_option("--intact", gen.intact, "intact modality index for intact_one");

  CommonOptions train_opts;
  bool json_params = false;
  auto* train_cmd = app.add_subcommand("train", "train a model and write a run directory");
  add_common(train_cmd, train_opts);
  train_cmd->add_flag("--json-params", json_params, "also write params.json");

  std::string params_path, split_text = "test", eval_dataset, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate saved parameters on a split");
  eval_cmd->add_option("--params", params_path, "params.bin (or params.json) from a train run");
  eval_cmd->add_option("--split", split_text, "train, validation or test")->capture_default_str();
  eval_cmd->add_option("--dataset", eval_dataset, "dataset bundle (defaults to the run's)");
  eval_cmd->add_option("--out", eval_out, "directory for metrics_<split>.json");

  CommonOptions sweep_opts;
  std::string scenario = "random_mask", levels = "0,0.2,0.4,0.6,0.8", sensitivity;
  std::size_t repeats = 5, sweep_jobs = 1;
  std::optional<std::size_t> intact;
  auto* sweep_cmd = app.add_subcommand("sweep", "missingness or sensitivity sweep");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--scenario", scenario, "intact_one, shared_core or random_mask")->capture_default_str();
  sweep_cmd->add_option("--levels", levels, "comma-separated levels or values")->capture_default_str();
  sweep_cmd->add_option("--repeats", repeats, "repeats per level")->capture_default_str();
  sweep_cmd->add_option("--jobs", sweep_jobs, "parallel workers")->capture_default_str();
  sweep_cmd->add_option("--intact", intact, "intact modality index for intact_one");
  sweep_cmd->add_option("--sensitivity", sensitivity, "lambda or sparsity: sweep that parameter over --levels");

  CommonOptions bench_opts;
  std::string modalities = "2-10";
  std::size_t bench_repeats = 5, bench_jobs = 1, bench_patients = 0;
  double mask_p = 0.5;
  auto* bench_cmd = app.add_subcommand("bench", "training-time scalability over modality count");
  add_common(bench_cmd, bench_opts, false);
  bench_cmd->add_option("--modalities", modalities, "range like 2-10 or list like 2,4,8")->capture_default_str();
  bench_cmd->add_option("--repeats", bench_repeats, "repeats per modality count")->capture_default_str();
  bench_cmd->add_option("--mask-prob", mask_p, "random masking probability")->capture_default_str();
  bench_cmd->add_option("--jobs", bench_jobs, "parallel workers")->capture_default_str();
  bench_cmd->add_option("--patients", bench_patients, "patients per dataset");

  CommonOptions graph_opts;
  std::string run_dir;
  auto* graph_cmd = app.add_subcommand("graph-stats", "graph size, homophily and degree statistics");
  add_common(graph_cmd, graph_opts);
  graph_cmd->add_option("--run", run_dir, "train run directory to take config and dataset from");

  CommonOptions ablate_opts;
  std::size_t ablate_jobs = 1;
  bool ablate_reconnect = false;
  auto* ablate_cmd = app.add_subcommand("ablate", "full model against the ablation variants");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--jobs", ablate_jobs, "parallel workers")->capture_default_str();
  ablate_cmd->add_flag("--with-no-reconnect", ablate_reconnect, "add a variant without reconnection edges");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*train_cmd) return cmd_train(train_opts, json_params);
    if (*eval_cmd) return cmd_eval(params_path, split_text, eval_dataset, eval_out);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, scenario, levels, repeats, sweep_jobs, sensitivity, intact);
    if (*bench_cmd) return cmd_bench(bench_opts, modalities, bench_repeats, mask_p, bench_jobs, bench_patients);
    if (*graph_cmd) return cmd_graph_stats(graph_opts, run_dir);
    if (*ablate_cmd) return cmd_ablate(ablate_opts, ablate_jobs, ablate_reconnect);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
