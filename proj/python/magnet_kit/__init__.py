# Copyright 2026 The magnet-kit Authors
# SPDX-License-Identifier: Apache-2.0
"""Python access to the magnet-kit core: data generation, training, metrics."""

import json

from . import _core
from ._core import (
    ConfigError,
    ContractError,
    DataError,
    Dataset,
    NumericError,
    Split,
    TrainedModel,
    apply_scenario,
    auprc,
    auroc,
    classification_metrics,
    gen_clusters,
    load_bundle,
    split_dataset,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DataError",
    "Dataset",
    "NumericError",
    "Split",
    "TrainedModel",
    "apply_scenario",
    "auprc",
    "auroc",
    "classification_metrics",
    "evaluate",
    "gen_clusters",
    "graph_stats",
    "load_bundle",
    "prepare_dataset",
    "report",
    "split_dataset",
    "train",
]


def _config(config):
    return "" if config is None else json.dumps(config)


def prepare_dataset(dataset, split, config=None):
    """Fit preprocessing on the training side and transform every patient."""
    return _core.prepare_dataset(dataset, split, _config(config))


def train(dataset, split, config=None):
    """Train on a prepared dataset. `config` is a dict of run settings."""
    return _core.train(dataset, split, _config(config))


def report(model):
    return json.loads(model.report_json)


def evaluate(model, dataset, split, config=None, split_name="test"):
    return json.loads(_core.evaluate(model, dataset, split, _config(config), split_name))


def graph_stats(dataset, split, config=None):
    return json.loads(_core.graph_stats(dataset, split, _config(config)))
