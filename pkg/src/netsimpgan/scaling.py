"""Per-node min-max scaling to ``[-1, 1]`` fitted on observed entries."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import NetsDataset, NetsSample
from .validation import check_nets_array


class NodeMinMaxScaler(TransformerMixin, BaseEstimator):
    """Scale every node's observed values linearly onto ``[-1, 1]``.

    A node whose observed values are all equal maps to 0 and back to that
    constant. Carriers under a 0 mask stay at 0 after transforming.

    Attributes
    ----------
    data_min_, data_max_ : ndarray of shape (n_nodes,)
        Observed per-node extremes in physical units.
    """

    def fit(self, X, mask=None, y=None):
        X, mask = check_nets_array(X, mask)
        observed = mask.astype(bool)
        counts = observed.sum(axis=(0, 2))
        if (counts == 0).any():
            node = int(np.flatnonzero(counts == 0)[0])
            raise ValueError(f"node {node} has no observed training entry; cannot fit its range")
        lo = np.where(observed, X, np.inf).min(axis=(0, 2))
        hi = np.where(observed, X, -np.inf).max(axis=(0, 2))
        self.data_min_ = lo
        self.data_max_ = hi
        self.n_nodes_ = X.shape[1]
        return self

    def _half_range(self):
        span = self.data_max_ - self.data_min_
        return span / 2.0, span > 0

    def transform(self, X, mask=None):
        check_is_fitted(self, "data_min_")
        X, mask = check_nets_array(X, mask)
        self._check_nodes(X)
        half, ok = self._half_range()
        centre = (self.data_max_ + self.data_min_) / 2.0
        safe = np.where(ok, half, 1.0)[None, :, None]
        out = np.where(ok[None, :, None], (X - centre[None, :, None]) / safe, 0.0)
        return np.where(mask == 1, out, 0.0)

    def inverse_transform(self, X, mask=None):
        """Map scaled values back to physical units; every entry is mapped."""
        check_is_fitted(self, "data_min_")
        X = np.asarray(X, dtype=float)
        squeeze = X.ndim == 2
        if squeeze:
            X = X[None]
        self._check_nodes(X)
        half, ok = self._half_range()
        centre = (self.data_max_ + self.data_min_) / 2.0
        shape = (1,) * (X.ndim - 2) + (-1, 1)
        out = np.where(ok.reshape(shape), X * half.reshape(shape) + centre.reshape(shape),
                       self.data_min_.reshape(shape))
        if mask is not None:
            out = np.where(np.asarray(mask).reshape(out.shape) == 1, out, 0.0)
        return out[0] if squeeze else out

    def _check_nodes(self, X):
        if X.shape[-2] != self.n_nodes_:
            raise ValueError(f"scaler fitted on {self.n_nodes_} nodes, got data with {X.shape[-2]}")


def fit_scaler(dataset: NetsDataset) -> NodeMinMaxScaler:
    """Fit on the observed entries of the training split only."""
    idx = dataset.split["train"]
    return NodeMinMaxScaler().fit(dataset.values[idx], dataset.masks[idx])


def scale_sample(scaler: NodeMinMaxScaler, sample: NetsSample) -> NetsSample:
    values = scaler.transform(sample.values, sample.mask.values)[0]
    return NetsSample(sample.graph, values, sample.mask)


def unscale_sample(scaler: NodeMinMaxScaler, sample: NetsSample) -> NetsSample:
    values = scaler.inverse_transform(sample.values, sample.mask.values)
    return NetsSample(sample.graph, values, sample.mask)


def scale_dataset(scaler: NodeMinMaxScaler, dataset: NetsDataset) -> NetsDataset:
    truth = None if dataset.truth is None else scaler.transform(dataset.truth, np.ones_like(dataset.masks))
    return dataset.replace(values=scaler.transform(dataset.values, dataset.masks), truth=truth)
