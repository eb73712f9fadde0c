"""Evaluation metrics and metric-optimal point predictors for sample ensembles."""
from __future__ import annotations

import numpy as np

METRICS = ("mae", "rmse", "mape")
MAPE_EPS = 1e-3


def _select(pred, truth, eval_mask):
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError(f"prediction {pred.shape} and truth {truth.shape} differ in shape")
    if eval_mask is None:
        sel = np.ones(pred.shape, dtype=bool)
    else:
        sel = np.asarray(eval_mask).astype(bool)
        if sel.shape != pred.shape:
            raise ValueError(f"eval mask {sel.shape} does not match {pred.shape}")
    if not sel.any():
        raise ValueError("evaluation mask selects no entries")
    return pred[sel], truth[sel]


def mae(pred, truth, eval_mask=None) -> float:
    p, y = _select(pred, truth, eval_mask)
    return float(np.abs(p - y).mean())


def rmse(pred, truth, eval_mask=None) -> float:
    p, y = _select(pred, truth, eval_mask)
    return float(np.sqrt(((p - y) ** 2).mean()))


def mape(pred, truth, eval_mask=None, eps: float = MAPE_EPS) -> float:
    """Mean of ``|pred - truth| / max(|truth|, eps)`` as a fraction (1.0 = 100%)."""
    p, y = _select(pred, truth, eval_mask)
    return float((np.abs(p - y) / np.maximum(np.abs(y), eps)).mean())


def score(metric: str, pred, truth, eval_mask=None) -> float:
    if metric == "mae":
        return mae(pred, truth, eval_mask)
    if metric == "rmse":
        return rmse(pred, truth, eval_mask)
    if metric == "mape":
        return mape(pred, truth, eval_mask)
    raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")


def point_predict(samples, metric: str, eps: float = MAPE_EPS) -> np.ndarray:
    """Collapse an ensemble along axis 0 into the point forecast suited to ``metric``.

    MAE takes the per-entry median and RMSE the mean. MAPE takes, per entry,
    the ensemble member ``v`` minimising ``sum_k |v - y_k| / max(|y_k|, eps)``
    (a weighted median, so the optimum sits on a sample point).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] < 1:
        raise ValueError("ensemble is empty")
    if metric == "mae":
        return np.median(samples, axis=0)
    if metric == "rmse":
        return samples.mean(axis=0)
    if metric == "mape":
        weights = 1.0 / np.maximum(np.abs(samples), eps)  # (K, ...)
        # cost[c] = sum_k w_k |s_c - s_k|, evaluated for every candidate c
        cost = (weights[None] * np.abs(samples[:, None] - samples[None])).sum(axis=1)
        best = np.argmin(cost, axis=0)
        return np.take_along_axis(samples, best[None], axis=0)[0]
    raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")


def wasserstein_distance(generated, reference) -> float:
    """Mean over positions of the 1-D Wasserstein-1 distance between sample sets.

    ``generated`` is ``(n, ...)`` and ``reference`` is ``(m, ...)``; each trailing
    position contributes the exact distance between the two empirical
    marginals, ``integral |F - G| dx``.
    """
    a = np.asarray(generated, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape[1:] != b.shape[1:]:
        raise ValueError(f"sample shapes differ: {a.shape[1:]} vs {b.shape[1:]}")
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both sample sets must be nonempty")
    return float(np.mean(wasserstein_per_entry(a, b)))


def wasserstein_per_entry(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = len(a), len(b)
    a = a.reshape(n, -1)
    b = b.reshape(m, -1)
    if n == m:
        return np.abs(np.sort(a, axis=0) - np.sort(b, axis=0)).mean(axis=0)
    grid = np.sort(np.concatenate([a, b]), axis=0)  # (n+m, P)
    widths = np.diff(grid, axis=0)
    pts = grid[:-1]
    cdf_a = (a[None] <= pts[:, None]).mean(axis=1)
    cdf_b = (b[None] <= pts[:, None]).mean(axis=1)
    return (np.abs(cdf_a - cdf_b) * widths).sum(axis=0)


def per_step(metric: str, pred, truth, eval_mask=None, t_history: int = 0) -> np.ndarray:
    """Metric computed separately for each future step ``t_history, ..., T-1``.

    Arrays are ``(..., V, T)``; steps whose evaluation mask is empty give NaN.
    """
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    sel = np.ones(pred.shape, bool) if eval_mask is None else np.asarray(eval_mask).astype(bool)
    out = []
    for t in range(t_history, pred.shape[-1]):
        if not sel[..., t].any():
            out.append(np.nan)
        else:
            out.append(score(metric, pred[..., t], truth[..., t], sel[..., t]))
    return np.array(out)
