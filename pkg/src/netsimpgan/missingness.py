"""Simulated MCAR missingness: point-wise random and graph-contiguous blocks.

Every generator returns a ``(V, T)`` uint8 matrix with 1 = observed and
0 = missing. Block nodes are picked by breadth-first traversal from a
uniformly random root (ascending neighbour order); when a component is
exhausted before the quota is met, traversal restarts from a uniformly
random unvisited node.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Graph, NetsDataset

KINDS = ("random", "sf-block", "sv-block", "mv-block")
_ALIASES = {
    "random": "random",
    "sf-block": "sf-block", "sfblock": "sf-block", "sf_block": "sf-block",
    "sv-block": "sv-block", "svblock": "sv-block", "sv_block": "sv-block",
    "mv-block": "mv-block", "mvblock": "mv-block", "mv_block": "mv-block",
}
MV_DEFAULT_BOUNDS = (1, 7, 1, 3)


def _check_rate(r: float, allow_zero: bool = True) -> float:
    r = float(r)
    if not (0.0 <= r <= 1.0) or (not allow_zero and r == 0.0):
        raise ValueError(f"missing rate must lie in {'[0, 1]' if allow_zero else '(0, 1]'}, got {r}")
    return r


def _floor_scaled(n: int, factor: float) -> int:
    # guard against sqrt round-off like 10 * sqrt(0.49) = 6.9999...
    return int(math.floor(n * factor + 1e-9))


def bfs_select(graph: Graph, quota: int, rng: np.random.Generator) -> list[int]:
    """Pick ``quota`` nodes by breadth-first traversal from a random root."""
    if quota > graph.node_count:
        raise ValueError(f"cannot select {quota} nodes from a graph with {graph.node_count}")
    chosen: list[int] = []
    visited = np.zeros(graph.node_count, dtype=bool)
    while len(chosen) < quota:
        root = int(rng.choice(np.flatnonzero(~visited)))
        for node in graph.bfs_order(root):
            if visited[node]:
                continue
            visited[node] = True
            chosen.append(node)
            if len(chosen) == quota:
                break
    return chosen


def _stamp_block(mask: np.ndarray, graph: Graph, n_nodes: int, n_steps: int, rng) -> None:
    if n_nodes == 0 or n_steps == 0:
        return
    nodes = bfs_select(graph, n_nodes, rng)
    start = int(rng.integers(0, mask.shape[1] - n_steps + 1))
    mask[nodes, start : start + n_steps] = 0


def gen_random_mask(V: int, T: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """Each entry missing independently with probability ``r``."""
    r = _check_rate(r)
    return (rng.random((V, T)) >= r).astype(np.uint8)


def sf_block_shape(V: int, T: int, r: float) -> tuple[int, int]:
    root = math.sqrt(r)
    return _floor_scaled(V, root), _floor_scaled(T, root)


def gen_sf_block_mask(graph: Graph, T: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """One block of ``floor(V sqrt r)`` nodes by ``floor(T sqrt r)`` consecutive steps."""
    r = _check_rate(r, allow_zero=False)
    mask = np.ones((graph.node_count, T), dtype=np.uint8)
    n_nodes, n_steps = sf_block_shape(graph.node_count, T, r)
    _stamp_block(mask, graph, n_nodes, n_steps, rng)
    return mask


def default_sv_bounds(V: int, T: int) -> tuple[int, int, int, int]:
    return V // 4, (3 * V) // 4, T // 4, (3 * T) // 4


def _check_bounds(bounds, V: int, T: int) -> tuple[int, int, int, int]:
    lv, uv, lt, ut = (int(b) for b in bounds)
    if not (0 <= lv <= uv <= V):
        raise ValueError(f"node bounds need 0 <= l_v <= u_v <= V={V}, got ({lv}, {uv})")
    if not (0 <= lt <= ut <= T):
        raise ValueError(f"time bounds need 0 <= l_t <= u_t <= T={T}, got ({lt}, {ut})")
    return lv, uv, lt, ut


def _variable_block(mask, graph, bounds, rng) -> None:
    lv, uv, lt, ut = bounds
    n_nodes = int(rng.integers(lv, uv + 1))
    n_steps = int(rng.integers(lt, ut + 1))
    _stamp_block(mask, graph, n_nodes, n_steps, rng)


def gen_sv_block_mask(graph: Graph, T: int, bounds=None, rng: np.random.Generator | None = None) -> np.ndarray:
    """One block whose node count and duration are drawn uniformly from the bounds."""
    rng = np.random.default_rng() if rng is None else rng
    V = graph.node_count
    bounds = _check_bounds(default_sv_bounds(V, T) if bounds is None else bounds, V, T)
    mask = np.ones((V, T), dtype=np.uint8)
    _variable_block(mask, graph, bounds, rng)
    return mask


def mv_block_count(V: int, T: int, r: float, bounds=MV_DEFAULT_BOUNDS) -> int:
    lv, uv, lt, ut = bounds
    mean_area = (lv + uv) * (lt + ut) / 4.0
    return int(math.floor(V * T * r / mean_area + 1e-9))


def gen_mv_block_mask(graph: Graph, T: int, r: float, bounds=None,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """Independent variable-shape blocks; overlaps are allowed."""
    rng = np.random.default_rng() if rng is None else rng
    r = _check_rate(r, allow_zero=False)
    V = graph.node_count
    bounds = _check_bounds(MV_DEFAULT_BOUNDS if bounds is None else bounds, V, T)
    mask = np.ones((V, T), dtype=np.uint8)
    n_blocks = mv_block_count(V, T, r, bounds)
    if n_blocks == 0:
        warnings.warn(f"MV-Block rate {r} gives zero blocks on a {V}x{T} segment; mask left complete",
                      stacklevel=2)
    for _ in range(n_blocks):
        _variable_block(mask, graph, bounds, rng)
    return mask


@dataclass(frozen=True)
class MissingPattern:
    """A missing-data pattern and its parameters.

    ``bounds`` is ``(l_v, u_v, l_t, u_t)``; when ``None``, SV-Block uses the
    quarter/three-quarter defaults of each segment and MV-Block uses
    ``(1, 7, 1, 3)``.
    """

    kind: str = "random"
    rate: float = 0.25
    bounds: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown missing pattern {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "kind", kind)
        _check_rate(self.rate)
        if self.bounds is not None:
            if len(self.bounds) != 4:
                raise ValueError("bounds must be (l_v, u_v, l_t, u_t)")
            object.__setattr__(self, "bounds", tuple(int(b) for b in self.bounds))

    def generate(self, graph: Graph, T: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "random":
            return gen_random_mask(graph.node_count, T, self.rate, rng)
        if self.rate == 0.0 and self.kind != "sv-block":
            return np.ones((graph.node_count, T), dtype=np.uint8)
        if self.kind == "sf-block":
            return gen_sf_block_mask(graph, T, self.rate, rng)
        if self.kind == "sv-block":
            return gen_sv_block_mask(graph, T, self.bounds, rng)
        return gen_mv_block_mask(graph, T, self.rate, self.bounds, rng)

    def check_segment(self, V: int, T: int) -> None:
        if self.bounds is not None and self.kind in ("sv-block", "mv-block"):
            _check_bounds(self.bounds, V, T)
        elif self.kind == "mv-block":
            _check_bounds(MV_DEFAULT_BOUNDS, V, T)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Per-sample generator derived from the pattern seed and sample index."""
    return np.random.default_rng([int(seed), int(index)])


def mask_dataset(dataset: NetsDataset, pattern: MissingPattern) -> NetsDataset:
    """Draw history and future masks independently for every sample.

    The complete values are kept as ``truth``; ``values`` hold carriers under
    the new masks.
    """
    if (dataset.masks == 0).any():
        raise ValueError("mask_dataset expects a complete dataset (all-ones masks)")
    V, T = dataset.graph.node_count, dataset.n_timesteps
    th = dataset.t_history
    pattern.check_segment(V, th)
    pattern.check_segment(V, T - th)
    masks = np.empty_like(dataset.masks)
    for i in range(len(dataset)):
        rng = sample_rng(pattern.seed, i)
        masks[i, :, :th] = pattern.generate(dataset.graph, th, rng)
        masks[i, :, th:] = pattern.generate(dataset.graph, T - th, rng)
    truth = dataset.values if dataset.truth is None else dataset.truth
    return dataset.replace(values=np.where(masks == 1, dataset.values, 0.0), masks=masks, truth=truth)
