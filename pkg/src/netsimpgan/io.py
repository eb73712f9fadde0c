"""CSV readers and writers for series, graph and mask files.

A dataset directory holds ``series.csv`` (header ``node_0,...``, one row per
timestamp), ``graph.csv`` (edge list ``i,j[,weight]``), optionally
``mask.csv`` (0/1, same shape as the series) and ``truth.csv`` (the complete
data behind a simulated mask), plus ``layout.json``.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import Graph, LayoutSpec, NetsDataset, contiguous_split, unwindow


class DataFormatError(ValueError):
    """A data file does not follow the expected CSV layout."""


SERIES_FILE = "series.csv"
GRAPH_FILE = "graph.csv"
MASK_FILE = "mask.csv"
TRUTH_FILE = "truth.csv"
LAYOUT_FILE = "layout.json"


def read_matrix_csv(path, expect_nodes: int | None = None, binary: bool = False) -> np.ndarray:
    """Read a node-header CSV into a ``(T, V)`` float array."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: file is empty") from None
        expected = [f"node_{k}" for k in range(len(header))]
        if [h.strip() for h in header] != expected:
            raise DataFormatError(f"{path}:1: header must be node_0,...,node_{{V-1}}, got {header[:3]}...")
        if expect_nodes is not None and len(header) != expect_nodes:
            raise DataFormatError(f"{path}:1: expected {expect_nodes} node columns, found {len(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
            try:
                vals = [float(x) for x in row]
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
            if binary and any(v not in (0.0, 1.0) for v in vals):
                bad = next(v for v in vals if v not in (0.0, 1.0))
                raise DataFormatError(f"{path}:{lineno}: mask value {bad:g} is not 0 or 1")
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.array(rows)


def write_matrix_csv(path, matrix: np.ndarray, fmt: str = "%.17g") -> None:
    matrix = np.asarray(matrix)
    header = ",".join(f"node_{k}" for k in range(matrix.shape[1]))
    np.savetxt(path, matrix, delimiter=",", header=header, comments="", fmt=fmt)


def read_graph_csv(path, node_count: int) -> Graph:
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip() in ("i", "source"):
                continue
            if len(row) not in (2, 3):
                raise DataFormatError(f"{path}:{lineno}: expected 'i,j[,weight]', got {row}")
            try:
                i, j = int(row[0]), int(row[1])
                w = float(row[2]) if len(row) == 3 else None
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
            if not (0 <= i < node_count and 0 <= j < node_count):
                raise DataFormatError(f"{path}:{lineno}: edge ({i}, {j}) outside node range 0..{node_count - 1}")
            if i == j:
                raise DataFormatError(f"{path}:{lineno}: self-loop on node {i}")
            rows.append((i, j) if w is None else (i, j, w))
    return Graph.from_edge_list(node_count, rows)


def write_graph_csv(path, graph: Graph) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for i, j in sorted(graph.edges):
            if graph.edge_weights is not None:
                writer.writerow([i, j, repr(graph.edge_weights.get((i, j), 1.0))])
            else:
                writer.writerow([i, j])


def load_dataset(series_path, graph_path, layout: LayoutSpec, mask_path=None, truth_path=None) -> NetsDataset:
    """Read series, graph and optional mask/truth CSVs and window them."""
    series = read_matrix_csv(series_path)
    n_nodes = series.shape[1]
    graph = read_graph_csv(graph_path, n_nodes)
    mask = None
    if mask_path is not None:
        mask = read_matrix_csv(mask_path, expect_nodes=n_nodes, binary=True).astype(np.uint8)
        if mask.shape != series.shape:
            raise DataFormatError(f"{mask_path}: mask shape {mask.shape} differs from series {series.shape}")
    truth = None
    if truth_path is not None:
        truth = read_matrix_csv(truth_path, expect_nodes=n_nodes)
        if truth.shape != series.shape:
            raise DataFormatError(f"{truth_path}: truth shape {truth.shape} differs from series {series.shape}")
    if mask is None:
        bad = np.argwhere(~np.isfinite(series))
        if len(bad):
            raise DataFormatError(f"{series_path}:{bad[0][0] + 2}: non-finite value without a mask file")
    else:
        bad = np.argwhere((mask == 1) & ~np.isfinite(series))
        if len(bad):
            raise DataFormatError(f"{series_path}:{bad[0][0] + 2}: observed value is not finite")
    return NetsDataset.from_series(graph, np.nan_to_num(series), layout, mask, truth)


def read_layout(path) -> LayoutSpec:
    data = json.loads(Path(path).read_text())
    data["split"] = tuple(data.get("split", (0.9, 0.05, 0.05)))
    return LayoutSpec(**data)


def write_layout(path, layout: LayoutSpec) -> None:
    Path(path).write_text(json.dumps({
        "t_total": layout.t_total,
        "t_history": layout.t_history,
        "window_stride": layout.window_stride,
        "split": list(layout.split),
    }, indent=2) + "\n")


def load_dataset_dir(directory, layout: LayoutSpec | None = None) -> NetsDataset:
    directory = Path(directory)
    if layout is None:
        layout = read_layout(directory / LAYOUT_FILE) if (directory / LAYOUT_FILE).exists() else LayoutSpec()
    mask = directory / MASK_FILE
    truth = directory / TRUTH_FILE
    return load_dataset(
        directory / SERIES_FILE,
        directory / GRAPH_FILE,
        layout,
        mask if mask.exists() else None,
        truth if truth.exists() else None,
    )


def save_dataset(dataset: NetsDataset, directory, layout: LayoutSpec | None = None) -> Path:
    """Write a dataset whose windows do not overlap back to CSV form."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if layout is None:
        layout = LayoutSpec(dataset.n_timesteps, dataset.t_history, dataset.n_timesteps,
                            _split_fractions(dataset))
    if layout.window_stride != layout.t_total:
        raise ValueError("only non-overlapping windows (stride == t_total) can be written back to a series")
    write_matrix_csv(directory / SERIES_FILE, unwindow(dataset.values))
    write_graph_csv(directory / GRAPH_FILE, dataset.graph)
    if (dataset.masks == 0).any():
        write_matrix_csv(directory / MASK_FILE, unwindow(dataset.masks), fmt="%d")
    elif (directory / MASK_FILE).exists():
        (directory / MASK_FILE).unlink()
    if dataset.truth is not None:
        write_matrix_csv(directory / TRUTH_FILE, unwindow(dataset.truth))
    write_layout(directory / LAYOUT_FILE, layout)
    return directory


def _split_fractions(dataset: NetsDataset) -> tuple:
    n = len(dataset)
    counts = [len(dataset.split[k]) for k in ("train", "validation", "test")]
    default = contiguous_split(n, (0.9, 0.05, 0.05))
    if counts == [len(default[k]) for k in ("train", "validation", "test")]:
        return (0.9, 0.05, 0.05)
    return tuple(c / n for c in counts)
