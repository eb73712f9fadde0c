"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np

from .core import Graph


def check_nets_array(X, mask=None, *, allow_nan: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(values, mask)`` as ``(N, V, T)`` float / uint8 arrays.

    ``X`` may be a single ``(V, T)`` sample. When ``mask`` is omitted, NaN
    entries of ``X`` are treated as missing. Values under a 0 mask are
    replaced by the carrier 0.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise ValueError(f"expected an array of shape (n_samples, n_nodes, n_timesteps), got {X.shape}")
    if mask is None:
        if not allow_nan and np.isnan(X).any():
            raise ValueError("input contains NaN")
        mask = ~np.isnan(X)
    mask = np.asarray(mask)
    if mask.ndim == 2:
        mask = mask[None]
    if mask.shape != X.shape:
        raise ValueError(f"mask shape {mask.shape} does not match values {X.shape}")
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("mask entries must be 0 or 1")
    mask = mask.astype(np.uint8)
    if not np.isfinite(X[mask == 1]).all():
        raise ValueError("observed entries must be finite")
    return np.where(mask == 1, X, 0.0), mask


def check_graph(graph, n_nodes: int) -> Graph:
    if graph is None:
        return Graph(n_nodes)
    if not isinstance(graph, Graph):
        raise TypeError(f"graph must be a netsimpgan.Graph, got {type(graph).__name__}")
    if graph.node_count != n_nodes:
        raise ValueError(f"graph has {graph.node_count} nodes but data has {n_nodes}")
    return graph


def check_t_history(t_history: int, n_timesteps: int) -> int:
    if not 1 <= t_history < n_timesteps:
        raise ValueError(f"t_history must lie in [1, {n_timesteps - 1}], got {t_history}")
    return int(t_history)
