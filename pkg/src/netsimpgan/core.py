"""Data model for networked time series (NETS) and their missingness masks.

Arrays follow a node-major layout: a single sample is ``(V, T)`` and a
stack of samples is ``(N, V, T)``. Masks hold 1 for observed and 0 for
missing entries. Values stored under a 0 mask are carriers (0 by
convention) and must never be read.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Undirected graph on nodes ``0..node_count-1``.

    Parameters
    ----------
    node_count : int
        Number of nodes ``V``.
    edges : frozenset of (int, int)
        Unordered node pairs stored as ``(min, max)``.
    edge_weights : mapping, optional
        Positive static weight per edge. Only the static graph convolution
        (no-attention variant) reads them; missing weights default to 1.
    """

    node_count: int
    edges: frozenset = frozenset()
    edge_weights: Mapping | None = None

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError(f"node_count must be positive, got {self.node_count}")
        canon = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on node {i} is not allowed")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise ValueError(f"edge ({i}, {j}) references a node outside 0..{self.node_count - 1}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canon))
        if self.edge_weights is not None:
            weights = {}
            for (i, j), w in self.edge_weights.items():
                key = (min(int(i), int(j)), max(int(i), int(j)))
                if key not in canon:
                    raise ValueError(f"weight given for non-edge {key}")
                if not w > 0:
                    raise ValueError(f"edge weight must be positive, got {w} for {key}")
                weights[key] = float(w)
            object.__setattr__(self, "edge_weights", weights)

    @classmethod
    def from_edge_list(cls, node_count: int, edges: Iterable[Sequence], weighted: bool = False) -> "Graph":
        """Build a graph from ``(i, j)`` or ``(i, j, w)`` rows; duplicates collapse."""
        pairs, weights = set(), {}
        for row in edges:
            i, j = int(row[0]), int(row[1])
            key = (min(i, j), max(i, j))
            pairs.add(key)
            if len(row) > 2:
                weights[key] = float(row[2])
        return cls(node_count, frozenset(pairs), weights if (weighted or weights) else None)

    def neighbors(self, node: int) -> list[int]:
        return sorted(self._neighbor_lists()[node])

    def _neighbor_lists(self) -> list[list[int]]:
        nbrs = [[] for _ in range(self.node_count)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1).astype(int)

    def adjacency(self, weighted: bool = False) -> np.ndarray:
        """Dense symmetric ``(V, V)`` adjacency without self-loops."""
        adj = np.zeros((self.node_count, self.node_count))
        for i, j in self.edges:
            w = 1.0
            if weighted and self.edge_weights is not None:
                w = self.edge_weights.get((i, j), 1.0)
            adj[i, j] = adj[j, i] = w
        return adj

    def permuted(self, perm: Sequence[int]) -> "Graph":
        """Relabel nodes so that old node ``perm[k]`` becomes node ``k``."""
        perm = np.asarray(perm)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(len(perm))
        edges = frozenset((int(inverse[i]), int(inverse[j])) for i, j in self.edges)
        weights = None
        if self.edge_weights is not None:
            weights = {(int(inverse[i]), int(inverse[j])): w for (i, j), w in self.edge_weights.items()}
        return Graph(self.node_count, edges, weights)

    def bfs_order(self, root: int) -> list[int]:
        """Breadth-first order of the component containing ``root``, ascending ties."""
        nbrs = [sorted(n) for n in self._neighbor_lists()]
        seen = {root}
        order = []
        queue = deque([root])
        while queue:
            node = queue.popleft()
            order.append(node)
            for nxt in nbrs[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return order


def _check_binary(values: np.ndarray, what: str = "mask") -> np.ndarray:
    values = np.asarray(values)
    if values.size and not np.isin(values, (0, 1)).all():
        bad = values[~np.isin(values, (0, 1))].flat[0]
        raise ValueError(f"{what} entries must be 0 or 1, found {bad!r}")
    return values.astype(np.uint8)


@dataclass(frozen=True)
class Mask:
    """Binary ``(V, T)`` observation mask split into history and future columns."""

    values: np.ndarray
    t_history: int
    t_future: int

    def __post_init__(self):
        values = _check_binary(self.values)
        if values.ndim != 2:
            raise ValueError(f"mask must be 2-D (V, T), got shape {values.shape}")
        if self.t_history < 1 or self.t_future < 1:
            raise ValueError("t_history and t_future must both be >= 1")
        if self.t_history + self.t_future != values.shape[1]:
            raise ValueError(
                f"t_history + t_future = {self.t_history + self.t_future} does not match T = {values.shape[1]}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def complement(self) -> np.ndarray:
        return (1 - self.values).astype(np.uint8)

    @property
    def history(self) -> np.ndarray:
        return self.values[:, : self.t_history]

    @property
    def future(self) -> np.ndarray:
        return self.values[:, self.t_history :]


@dataclass(frozen=True)
class NetsSample:
    """One incomplete NETS sample ``(X_M, M)`` on a graph."""

    graph: Graph
    values: np.ndarray
    mask: Mask

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.graph.node_count, self.mask.shape[1]) or values.shape != self.mask.shape:
            raise ValueError(
                f"values shape {values.shape} does not match graph ({self.graph.node_count} nodes) "
                f"and mask {self.mask.shape}"
            )
        if not np.isfinite(values[self.mask.values == 1]).all():
            raise ValueError("observed entries must be finite")
        values = np.where(self.mask.values == 1, values, 0.0)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def prediction_mask_array(mask: np.ndarray, t_history: int) -> np.ndarray:
    """Array form of :func:`make_prediction_mask`; works on ``(..., V, T)``."""
    out = np.array(mask, dtype=np.uint8, copy=True)
    out[..., t_history:] = 0
    return out


def make_prediction_mask(mask: Mask) -> Mask:
    """Keep the history mask and declare every future entry missing."""
    return Mask(prediction_mask_array(mask.values, mask.t_history), mask.t_history, mask.t_future)


def apply_masking_operator(values, mask, tau: float = 0.0) -> np.ndarray:
    """Keep observed entries and write ``tau`` into every missing position."""
    values = np.asarray(values, dtype=float)
    mask = mask.values if isinstance(mask, Mask) else np.asarray(mask)
    if values.shape != mask.shape:
        raise ValueError(f"shape mismatch: values {values.shape} vs mask {mask.shape}")
    return np.where(mask == 1, values, tau)


@dataclass(frozen=True)
class LayoutSpec:
    """How a long series is cut into samples and split."""

    t_total: int = 16
    t_history: int = 8
    window_stride: int = 16
    split: tuple = (0.9, 0.05, 0.05)

    def __post_init__(self):
        if not 1 <= self.t_history < self.t_total:
            raise ValueError(f"need 1 <= t_history < t_total, got {self.t_history}, {self.t_total}")
        if self.window_stride < 1:
            raise ValueError("window_stride must be positive")
        if len(self.split) != 3 or any(p < 0 for p in self.split) or abs(sum(self.split) - 1) > 1e-9:
            raise ValueError(f"split must be three non-negative fractions summing to 1, got {self.split}")
        object.__setattr__(self, "split", tuple(float(p) for p in self.split))

    @property
    def t_future(self) -> int:
        return self.t_total - self.t_history


def window_series(series: np.ndarray, t_total: int, stride: int) -> np.ndarray:
    """Cut a ``(T_total, V)`` series into ``(N, V, t_total)`` windows."""
    series = np.asarray(series)
    n_steps = series.shape[0]
    if n_steps < t_total:
        raise ValueError(f"series has {n_steps} timestamps, fewer than one window of {t_total}")
    starts = range(0, n_steps - t_total + 1, stride)
    return np.stack([series[s : s + t_total].T for s in starts])


def unwindow(windows: np.ndarray) -> np.ndarray:
    """Inverse of :func:`window_series` for non-overlapping windows."""
    windows = np.asarray(windows)
    return np.concatenate(list(windows), axis=1).T


def contiguous_split(n_samples: int, fractions: Sequence[float]) -> dict[str, np.ndarray]:
    n_train = int(np.floor(n_samples * fractions[0] + 1e-9))
    n_val = int(np.floor(n_samples * fractions[1] + 1e-9))
    idx = np.arange(n_samples)
    return {
        "train": idx[:n_train],
        "validation": idx[n_train : n_train + n_val],
        "test": idx[n_train + n_val :],
    }


@dataclass(frozen=True)
class NetsDataset:
    """Samples sharing one graph and one history/future layout.

    ``values`` and ``masks`` are ``(N, V, T)``. ``truth`` optionally keeps the
    complete data behind a simulated mask, for evaluation only.
    """

    graph: Graph
    values: np.ndarray
    masks: np.ndarray
    t_history: int
    split: dict = field(default=None)
    truth: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        masks = _check_binary(self.masks)
        if values.ndim != 3 or values.shape != masks.shape:
            raise ValueError(f"values {values.shape} and masks {masks.shape} must be equal (N, V, T) shapes")
        if values.shape[1] != self.graph.node_count:
            raise ValueError(f"values have {values.shape[1]} nodes but graph has {self.graph.node_count}")
        if not 1 <= self.t_history < values.shape[2]:
            raise ValueError(f"t_history={self.t_history} invalid for T={values.shape[2]}")
        if not np.isfinite(values[masks == 1]).all():
            raise ValueError("observed entries must be finite")
        values = np.where(masks == 1, values, 0.0)
        split = self.split
        if split is None:
            split = contiguous_split(len(values), (0.9, 0.05, 0.05))
        split = {k: np.asarray(v, dtype=int) for k, v in split.items()}
        joined = np.sort(np.concatenate([split.get(k, np.array([], int)) for k in ("train", "validation", "test")]))
        if not np.array_equal(joined, np.arange(len(values))):
            raise ValueError("train/validation/test split must partition the sample indices")
        truth = self.truth
        if truth is not None:
            truth = np.asarray(truth, dtype=float)
            if truth.shape != values.shape:
                raise ValueError("truth must have the same shape as values")
            truth.setflags(write=False)
        for arr in (values, masks):
            arr.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "split", split)
        object.__setattr__(self, "truth", truth)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_timesteps(self) -> int:
        return self.values.shape[2]

    @property
    def t_future(self) -> int:
        return self.n_timesteps - self.t_history

    @property
    def samples(self) -> list[NetsSample]:
        return [self.sample(i) for i in range(len(self))]

    def sample(self, index: int) -> NetsSample:
        mask = Mask(self.masks[index], self.t_history, self.t_future)
        return NetsSample(self.graph, self.values[index], mask)

    def subset(self, name: str) -> "NetsDataset":
        """Dataset restricted to one split; the subset is entirely ``train``."""
        idx = self.split[name]
        return NetsDataset(
            self.graph,
            self.values[idx],
            self.masks[idx],
            self.t_history,
            {"train": np.arange(len(idx)), "validation": np.array([], int), "test": np.array([], int)},
            None if self.truth is None else self.truth[idx],
        )

    def replace(self, **changes) -> "NetsDataset":
        fields = dict(
            graph=self.graph, values=self.values, masks=self.masks, t_history=self.t_history,
            split=self.split, truth=self.truth,
        )
        fields.update(changes)
        return NetsDataset(**fields)

    @classmethod
    def from_series(cls, graph: Graph, series: np.ndarray, layout: LayoutSpec, mask: np.ndarray | None = None,
                    truth: np.ndarray | None = None) -> "NetsDataset":
        """Window a ``(T_total, V)`` series (and optional mask/truth) into a dataset."""
        series = np.asarray(series, dtype=float)
        if mask is None:
            mask = np.ones_like(series, dtype=np.uint8)
        windows = window_series(series, layout.t_total, layout.window_stride)
        masks = window_series(mask, layout.t_total, layout.window_stride)
        truth_w = None if truth is None else window_series(truth, layout.t_total, layout.window_stride)
        return cls(graph, windows, masks, layout.t_history, contiguous_split(len(windows), layout.split), truth_w)
