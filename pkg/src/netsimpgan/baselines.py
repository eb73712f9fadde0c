"""Training-free fill rules: Mean, TLE, LO (prediction) and NA, TLI (imputation).

Every rule reads only entries where ``target_mask == 1`` and fills the
others; when a rule's inputs are unavailable the entry falls back to the
sample mean of the available entries.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import Graph, NetsSample, prediction_mask_array
from .validation import check_graph, check_nets_array, check_t_history

BASELINES = ("mean", "tle", "lo", "na", "tli")


def _kind(kind: str) -> str:
    key = str(kind).strip().lower()
    if key not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; choose from {BASELINES}")
    return key


def baseline_fill(kind: str, values: np.ndarray, target_mask: np.ndarray, graph: Graph | None = None) -> np.ndarray:
    """Fill one ``(V, T)`` sample according to ``kind``."""
    kind = _kind(kind)
    values = np.asarray(values, dtype=float)
    avail = np.asarray(target_mask).astype(bool)
    if values.shape != avail.shape:
        raise ValueError(f"values {values.shape} and target mask {avail.shape} differ in shape")
    if not avail.any():
        raise ValueError("sample has no available entry; cannot fill")
    mean = values[avail].mean()
    out = np.where(avail, values, mean)
    if kind == "mean":
        return out
    V, T = values.shape
    if kind == "na":
        if graph is None:
            raise ValueError("NA needs the graph")
        adj = graph.adjacency() > 0
        for t in range(T):
            for v in np.flatnonzero(~avail[:, t]):
                nb = adj[v] & avail[:, t]
                if nb.any():
                    out[v, t] = values[nb, t].mean()
        return out
    for v in range(V):
        seen = np.flatnonzero(avail[v])
        for t in np.flatnonzero(~avail[v]):
            pos = np.searchsorted(seen, t)  # seen[:pos] are strictly earlier
            if kind == "lo" and pos >= 1:
                out[v, t] = values[v, seen[pos - 1]]
            elif kind == "tle" and pos >= 2:
                t1, t2 = seen[pos - 2], seen[pos - 1]
                slope = (values[v, t2] - values[v, t1]) / (t2 - t1)
                out[v, t] = values[v, t2] + slope * (t - t2)
            elif kind == "tli" and pos >= 1 and pos < len(seen):
                out[v, t] = 0.5 * (values[v, seen[pos - 1]] + values[v, seen[pos]])
    return out


def baseline_fill_sample(kind: str, sample: NetsSample, target_mask=None) -> np.ndarray:
    target = sample.mask.values if target_mask is None else getattr(target_mask, "values", target_mask)
    return baseline_fill(kind, sample.values, np.asarray(target) & sample.mask.values, sample.graph)


class BaselineImputer(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`baseline_fill`.

    Parameters
    ----------
    kind : {"mean", "tle", "lo", "na", "tli"}
    graph : Graph, optional
        Required by ``"na"``.
    t_history : int
        Number of history columns.
    task : {"predict", "impute"}
        ``"predict"`` hides the whole future before filling, ``"impute"`` uses
        the observation mask as is.
    """

    def __init__(self, kind: str = "mean", graph: Graph | None = None, t_history: int = 8, task: str = "predict"):
        self.kind = kind
        self.graph = graph
        self.t_history = t_history
        self.task = task

    def fit(self, X=None, mask=None, y=None):
        _kind(self.kind)
        if self.task not in ("predict", "impute"):
            raise ValueError("task must be 'predict' or 'impute'")
        self.is_fitted_ = True
        return self

    def transform(self, X, mask=None):
        X, mask = check_nets_array(X, mask)
        graph = check_graph(self.graph, X.shape[1])
        th = check_t_history(self.t_history, X.shape[2])
        target = prediction_mask_array(mask, th) if self.task == "predict" else mask
        return np.stack([baseline_fill(self.kind, x, m, graph) for x, m in zip(X, target)])

    def predict(self, X, mask=None):
        return self.transform(X, mask)
