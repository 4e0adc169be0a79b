// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "magnet/dataset.hpp"
#include "magnet/errors.hpp"
#include "magnet/graph.hpp"
#include "magnet/metrics.hpp"
#include "magnet/serialize.hpp"
#include "magnet/trainer.hpp"

namespace py = pybind11;
using namespace magnet;
using nlohmann::json;

namespace {

py::array_t<double> to_numpy(const Tensor<double>& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) view(static_cast<py::ssize_t>(r), static_cast<py::ssize_t>(c)) = t(r, c);
  }
  return out;
}

RunConfig config_from(const std::string& text) {
  return text.empty() ? RunConfig{} : RunConfig::from_json(json::parse(text));
}

struct TrainedModel {
  ParameterSet<double> params;
  std::string report;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the magnet-kit C++ core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

  py::class_<MultiomicsDataset>(m, "Dataset")
      .def_property_readonly("patient_count", &MultiomicsDataset::patient_count)
      .def_property_readonly("modality_count", &MultiomicsDataset::modality_count)
      .def_property_readonly("class_count", [](const MultiomicsDataset& d) { return d.class_count; })
      .def_property_readonly("labels", [](const MultiomicsDataset& d) { return d.labels; })
      .def_property_readonly("patient_ids", [](const MultiomicsDataset& d) { return d.patient_ids; })
      .def_property_readonly("modality_names", [](const MultiomicsDataset& d) { return d.modality_names; })
      .def_property_readonly("feature_dims", &MultiomicsDataset::feature_dims)
      .def("features", [](const MultiomicsDataset& d, std::size_t i) { return to_numpy(d.modalities.at(i)); })
      .def("mask", [](const MultiomicsDataset& d) {
        py::array_t<bool> out({d.mask.rows(), d.mask.cols()});
        auto view = out.mutable_unchecked<2>();
        for (std::size_t j = 0; j < d.mask.rows(); ++j) {
          for (std::size_t i = 0; i < d.mask.cols(); ++i) {
            view(static_cast<py::ssize_t>(j), static_cast<py::ssize_t>(i)) = d.mask(j, i);
          }
        }
        return out;
      })
      .def("save", [](const MultiomicsDataset& d, const std::filesystem::path& dir) { save_bundle(d, dir); });

  py::class_<SplitAssignment>(m, "Split")
      .def("ids", [](const SplitAssignment& s, const std::string& name) { return s.ids(parse_split(name)); })
      .def("count", [](const SplitAssignment& s, const std::string& name) { return s.count(parse_split(name)); });

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_property_readonly("report_json", [](const TrainedModel& t) { return t.report; })
      .def_property_readonly("parameter_names", [](const TrainedModel& t) { return t.params.names(); })
      .def("parameter", [](const TrainedModel& t, const std::string& name) { return to_numpy(t.params.get(name)); })
      .def("save", [](const TrainedModel& t, const std::filesystem::path& path) { save_parameters(t.params, path); });

  m.def(
      "gen_clusters",
      [](std::size_t n, std::size_t clusters, std::vector<std::size_t> dims, double cluster_sep, std::uint64_t seed) {
        ClusterGenOptions o;
        o.n = n;
        o.clusters = clusters;
        o.dims = std::move(dims);
        o.cluster_sep = cluster_sep;
        o.min_cluster_size = std::min<std::size_t>(o.min_cluster_size, n / (2 * clusters));
        o.seed = seed;
        return gen_clusters(o);
      },
      py::arg("n") = 500, py::arg("clusters") = 15, py::arg("dims") = std::vector<std::size_t>{120, 80, 100},
      py::arg("cluster_sep") = 1.0, py::arg("seed") = 0);
  m.def("load_bundle", &load_bundle, py::arg("dir"));
  m.def(
      "apply_scenario",
      [](const MultiomicsDataset& ds, const std::string& kind, double ratio, std::uint64_t seed,
         std::optional<std::size_t> intact) {
        return apply_scenario(ds, ScenarioSpec{parse_scenario(kind), intact, ratio, seed});
      },
      py::arg("dataset"), py::arg("kind"), py::arg("ratio"), py::arg("seed"), py::arg("intact") = std::nullopt);
  m.def("split_dataset", &split_dataset, py::arg("dataset"), py::arg("seed"));
  m.def(
      "prepare_dataset",
      [](const MultiomicsDataset& ds, const SplitAssignment& split, const std::string& config) {
        return prepare_dataset(ds, split, config_from(config));
      },
      py::arg("dataset"), py::arg("split"), py::arg("config_json") = "");

  m.def(
      "train",
      [](const MultiomicsDataset& ds, const SplitAssignment& split, const std::string& config) {
        const RunConfig cfg = config_from(config);
        TrainResult result;
        {
          py::gil_scoped_release release;
          result = train(ds, split, cfg);
        }
        return TrainedModel{std::move(result.params), result.report.to_json().dump()};
      },
      py::arg("dataset"), py::arg("split"), py::arg("config_json") = "");
  m.def(
      "evaluate",
      [](const TrainedModel& model, const MultiomicsDataset& ds, const SplitAssignment& split,
         const std::string& config, const std::string& split_name) {
        return evaluate(model.params, ds, split, config_from(config), parse_split(split_name)).to_json().dump();
      },
      py::arg("model"), py::arg("dataset"), py::arg("split"), py::arg("config_json") = "",
      py::arg("split_name") = "test");
  m.def(
      "graph_stats",
      [](const MultiomicsDataset& ds, const SplitAssignment& split, const std::string& config) {
        const RunConfig cfg = config_from(config);
        const GraphContext g = build_graph_context(ds, split, cfg);
        const HomophilyStats h = homophily(g.full, ds.labels);
        const DegreeStats d = degree_stats(g.full);
        json out{{"nodes", ds.patient_count()},
                 {"edges", g.full.edges.size()},
                 {"train_mode_edges", g.train.edges.size()},
                 {"threshold", g.full.threshold},
                 {"node_homophily", h.node_homophily},
                 {"edge_homophily", h.edge_homophily},
                 {"random_baseline", h.random_baseline},
                 {"min_degree", d.min},
                 {"max_degree", d.max},
                 {"mean_degree", d.mean}};
        return out.dump();
      },
      py::arg("dataset"), py::arg("split"), py::arg("config_json") = "");

  m.def(
      "classification_metrics",
      [](const std::vector<int>& truth, const std::vector<int>& predicted, std::size_t classes) {
        const auto c = classification_metrics(truth, predicted, classes);
        return py::dict(py::arg("accuracy") = c.accuracy, py::arg("macro_f1") = c.macro_f1,
                        py::arg("weighted_f1") = c.weighted_f1, py::arg("mcc") = c.mcc,
                        py::arg("per_class_f1") = c.per_class_f1);
      },
      py::arg("truth"), py::arg("predicted"), py::arg("class_count"));
  m.def(
      "auroc", [](const std::vector<int>& y, const std::vector<double>& s) { return auroc(y, s); }, py::arg("truth"),
      py::arg("scores"));
  m.def(
      "auprc", [](const std::vector<int>& y, const std::vector<double>& s) { return auprc(y, s); }, py::arg("truth"),
      py::arg("scores"));
}
