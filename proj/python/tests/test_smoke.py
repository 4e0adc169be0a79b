# Copyright 2026 The magnet-kit Authors
# SPDX-License-Identifier: Apache-2.0
import numpy as np
import pytest

import magnet_kit as mk

CONFIG = {"embed_dim": 8, "heads": 2, "epochs": 40, "learning_rate": 0.005, "seed": 3}


@pytest.fixture(scope="module")
def data():
    raw = mk.gen_clusters(n=60, clusters=2, dims=[6, 4], cluster_sep=3.0, seed=3)
    raw = mk.apply_scenario(raw, "random_mask", 0.3, seed=3)
    split = mk.split_dataset(raw, 3)
    return mk.prepare_dataset(raw, split, CONFIG), split


def test_dataset_views(data):
    ds, split = data
    assert ds.patient_count == 60
    assert ds.modality_count == 2
    assert ds.features(0).shape == (60, 6)
    mask = ds.mask()
    assert mask.shape == (60, 2)
    assert mask.any(axis=1).all()
    assert np.all(ds.features(1)[~mask[:, 1]] == 0.0)
    sizes = [split.count(s) for s in ("train", "validation", "test")]
    assert sum(sizes) == 60
    assert set(split.ids("test")).isdisjoint(split.ids("train"))


def test_train_and_evaluate(data):
    ds, split = data
    model = mk.train(ds, split, CONFIG)
    rep = mk.report(model)
    assert len(rep["losses"]) == 40
    assert rep["audit"]["test_label_reads"] == 0
    test = mk.evaluate(model, ds, split, CONFIG, "test")
    assert test["macro_f1"] == rep["metrics"]["test"]["macro_f1"]
    again = mk.report(mk.train(ds, split, CONFIG))
    assert again["losses"] == rep["losses"]
    assert "dec.w1" in model.parameter_names


def test_graph_stats(data):
    ds, split = data
    stats = mk.graph_stats(ds, split, CONFIG)
    assert stats["nodes"] == 60
    assert stats["min_degree"] >= 1
    assert stats["train_mode_edges"] <= stats["edges"]


def test_metrics():
    m = mk.classification_metrics([0, 1, 1, 0], [0, 1, 0, 0], 2)
    assert m["accuracy"] == 0.75
    assert mk.auroc([0, 0, 1, 1], [0.5, 0.5, 0.5, 0.5]) == 0.5
    assert mk.auprc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0


def test_errors(data):
    ds, split = data
    with pytest.raises(mk.ConfigError):
        mk.train(ds, split, {"learning_rat": 0.1, "seed": 1})
    with pytest.raises(mk.ConfigError):
        mk.train(ds, split, {"epochs": 1})
    with pytest.raises(mk.DataError):
        mk.classification_metrics([], [], 2)
