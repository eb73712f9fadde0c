import numpy as np
import pytest

from netsimpgan.core import Graph, NetsDataset
from netsimpgan.scaling import NodeMinMaxScaler, fit_scaler, scale_dataset


def _fit(lo, hi):
    X = np.array([[[lo, hi]]], dtype=float)
    return NodeMinMaxScaler().fit(X)


def test_examples():
    s = _fit(0, 100)
    assert s.transform(np.array([[[50.0, 0.0]]]))[0, 0, 0] == 0.0
    assert s.transform(np.array([[[50.0, 0.0]]]))[0, 0, 1] == -1.0
    d = _fit(2, 2)
    assert d.transform(np.array([[[2.0, 2.0]]]))[0, 0, 0] == 0.0
    assert d.inverse_transform(np.zeros((1, 1, 2)))[0, 0, 0] == 2.0


def test_round_trip_1000_matrices():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        V, T = rng.integers(1, 6), rng.integers(2, 10)
        X = rng.normal(rng.uniform(-1e3, 1e3), rng.uniform(1e-3, 1e3), size=(3, V, T))
        mask = (rng.random(X.shape) > 0.2).astype(np.uint8)
        mask[0] = 1
        s = NodeMinMaxScaler().fit(X, mask)
        Z = s.transform(X, mask)
        assert np.abs(Z[mask == 1]).max() <= 1 + 1e-12
        back = s.inverse_transform(Z, mask)
        err = np.abs(back - X)[mask == 1] / np.maximum(np.abs(X[mask == 1]), 1e-12)
        worst = max(worst, err.max())
    assert worst <= 1e-6


def test_node_without_observations_errors():
    X = np.ones((2, 2, 3))
    m = np.ones_like(X)
    m[:, 1] = 0
    with pytest.raises(ValueError, match="node 1"):
        NodeMinMaxScaler().fit(X, m)


def test_fit_uses_train_split_only():
    vals = np.zeros((20, 1, 4))
    vals[:18] = np.linspace(0, 1, 4)
    vals[18:] = 1e6
    ds = NetsDataset(Graph(1), vals, np.ones_like(vals), 2)
    s = fit_scaler(ds)
    assert s.data_max_[0] == 1.0
    scaled = scale_dataset(s, ds)
    assert scaled.values[:18].min() == -1.0
