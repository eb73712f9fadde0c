"""Synthetic graph-coupled time series and the temporal-stability disruption."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Graph, LayoutSpec, NetsDataset


def ring_graph(V: int) -> Graph:
    if V < 3:
        return Graph(V, frozenset((i, i + 1) for i in range(V - 1)))
    return Graph(V, frozenset((i, (i + 1) % V) for i in range(V)))


def grid_graph(V: int) -> Graph:
    """Rows by columns lattice with the most square factorisation of ``V``."""
    rows = max(d for d in range(1, int(np.sqrt(V)) + 1) if V % d == 0)
    cols = V // rows
    edges = set()
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c
            if c + 1 < cols:
                edges.add((k, k + 1))
            if r + 1 < rows:
                edges.add((k, k + cols))
    return Graph(V, frozenset(edges))


def random_geometric_graph(V: int, radius: float, rng: np.random.Generator) -> Graph:
    pts = rng.random((V, 2))
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    i, j = np.nonzero(np.triu(d <= radius, k=1))
    return Graph(V, frozenset(zip(i.tolist(), j.tolist())))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of ``x[t+1] = a x[t] + b A_norm x[t] + seasonal(t) + noise``.

    ``A_norm`` is the row-normalised adjacency. The physical series is
    ``offset + scale * x`` with per-node offset and scale drawn from the
    given ranges. ``seasonal`` is a sinusoid of period ``period`` and
    amplitude ``amplitude`` with a random phase per node.
    """

    n_nodes: int = 20
    t_total: int = 1600
    graph: str = "grid"
    radius: float = 0.35
    self_coef: float = 0.6
    diffusion_coef: float = 0.3
    period: float = 24.0
    amplitude: float = 1.0
    noise_std: float = 0.2
    offset_range: tuple = (0.0, 100.0)
    scale_range: tuple = (5.0, 20.0)
    x0: float | tuple = 0.0
    burn_in: int = 100
    seed: int = 0
    layout: LayoutSpec = field(default_factory=LayoutSpec)

    def __post_init__(self):
        if self.n_nodes < 1 or self.t_total < 1 or self.burn_in < 0:
            raise ValueError("n_nodes and t_total must be positive, burn_in non-negative")
        if self.graph not in ("ring", "grid", "random-geometric"):
            raise ValueError(f"unknown graph model {self.graph!r}")
        if abs(self.self_coef) + abs(self.diffusion_coef) > 1.0:
            raise ValueError(
                f"unstable dynamics: |a| + |b| = {abs(self.self_coef) + abs(self.diffusion_coef):g} exceeds 1"
            )
        if self.period <= 0 or self.noise_std < 0:
            raise ValueError("period must be positive and noise_std non-negative")


def build_graph(spec: SynthSpec, rng: np.random.Generator) -> Graph:
    if spec.graph == "ring":
        return ring_graph(spec.n_nodes)
    if spec.graph == "grid":
        return grid_graph(spec.n_nodes)
    return random_geometric_graph(spec.n_nodes, spec.radius, rng)


def row_normalized(adj: np.ndarray) -> np.ndarray:
    deg = adj.sum(axis=1, keepdims=True)
    return np.divide(adj, deg, out=np.zeros_like(adj), where=deg > 0)


def simulate(spec: SynthSpec, graph: Graph, rng: np.random.Generator) -> np.ndarray:
    """Latent trajectory of shape ``(t_total, V)`` before the per-node affine map."""
    V = spec.n_nodes
    A = row_normalized(graph.adjacency())
    phase = rng.uniform(0, 2 * np.pi, V)
    x = np.broadcast_to(np.asarray(spec.x0, dtype=float), (V,)).copy()
    out = np.empty((spec.t_total, V))
    steps = spec.burn_in + spec.t_total
    for step in range(steps):
        t = step - spec.burn_in
        if t >= 0:
            out[t] = x
        season = spec.amplitude * np.sin(2 * np.pi * step / spec.period + phase)
        x = spec.self_coef * x + spec.diffusion_coef * (A @ x) + season + spec.noise_std * rng.standard_normal(V)
    return out


def generate(spec: SynthSpec | None = None) -> NetsDataset:
    """Complete synthetic dataset windowed per ``spec.layout``."""
    spec = SynthSpec() if spec is None else spec
    rng = np.random.default_rng(spec.seed)
    graph = build_graph(spec, rng)
    latent = simulate(spec, graph, rng)
    offset = rng.uniform(*spec.offset_range, spec.n_nodes)
    scale = rng.uniform(*spec.scale_range, spec.n_nodes)
    series = offset + scale * latent
    return NetsDataset.from_series(graph, series, spec.layout)


def disrupt(dataset: NetsDataset, gamma: float, seed: int = 0) -> NetsDataset:
    """Add zero-mean Gaussian noise with std ``gamma * (node max - node min)``.

    Node ranges come from the complete data when available, otherwise from the
    observed entries. The masks are unchanged.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma == 0:
        return dataset
    rng = np.random.default_rng(seed)
    base = dataset.truth if dataset.truth is not None else dataset.values
    known = np.ones_like(dataset.masks, dtype=bool) if dataset.truth is not None else dataset.masks == 1
    lo = np.where(known, base, np.inf).min(axis=(0, 2))
    hi = np.where(known, base, -np.inf).max(axis=(0, 2))
    std = gamma * (hi - lo)
    noise = rng.standard_normal(dataset.values.shape) * std[None, :, None]
    truth = None if dataset.truth is None else dataset.truth + noise
    return dataset.replace(values=np.where(dataset.masks == 1, dataset.values + noise, 0.0), truth=truth)
