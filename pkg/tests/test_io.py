import numpy as np
import pytest

from netsimpgan.core import Graph, LayoutSpec, NetsDataset
from netsimpgan.io import (
    DataFormatError,
    load_dataset,
    load_dataset_dir,
    read_graph_csv,
    read_matrix_csv,
    save_dataset,
    write_matrix_csv,
)


def _write(path, text):
    path.write_text(text)
    return path


def _series(tmp_path, T=32, V=3):
    data = np.random.default_rng(0).normal(size=(T, V))
    write_matrix_csv(tmp_path / "series.csv", data)
    return data


def test_load_windows_and_empty_graph(tmp_path):
    _series(tmp_path)
    _write(tmp_path / "graph.csv", "")
    ds = load_dataset(tmp_path / "series.csv", tmp_path / "graph.csv", LayoutSpec())
    assert ds.values.shape == (2, 3, 16)
    assert ds.graph.edges == frozenset()
    assert ds.graph.node_count == 3


def test_graph_duplicates_collapse(tmp_path):
    p = _write(tmp_path / "g.csv", "0,1\n1,0\n1,2,0.5\n")
    g = read_graph_csv(p, 3)
    assert g.edges == frozenset({(0, 1), (1, 2)})


def test_mask_value_two_rejected_with_line(tmp_path):
    _series(tmp_path, T=4)
    _write(tmp_path / "mask.csv", "node_0,node_1,node_2\n1,1,1\n1,2,1\n1,1,1\n1,1,1\n")
    with pytest.raises(DataFormatError, match=r"mask.csv:3"):
        read_matrix_csv(tmp_path / "mask.csv", binary=True)


def test_malformed_series_reports_line(tmp_path):
    _write(tmp_path / "s.csv", "node_0,node_1\n1,2\n3\n")
    with pytest.raises(DataFormatError, match=r"s.csv:3"):
        read_matrix_csv(tmp_path / "s.csv")
    _write(tmp_path / "s.csv", "node_0,node_1\n1,abc\n")
    with pytest.raises(DataFormatError, match=r"s.csv:2"):
        read_matrix_csv(tmp_path / "s.csv")
    _write(tmp_path / "s.csv", "a,b\n1,2\n")
    with pytest.raises(DataFormatError, match=r"s.csv:1"):
        read_matrix_csv(tmp_path / "s.csv")


def test_node_count_mismatch(tmp_path):
    _series(tmp_path, T=16, V=3)
    _write(tmp_path / "graph.csv", "0,5\n")
    with pytest.raises(DataFormatError, match=r"graph.csv:1"):
        load_dataset(tmp_path / "series.csv", tmp_path / "graph.csv", LayoutSpec())
    _write(tmp_path / "graph.csv", "0,1\n")
    write_matrix_csv(tmp_path / "mask.csv", np.ones((16, 2)), fmt="%d")
    with pytest.raises(DataFormatError, match="expected 3 node columns"):
        load_dataset(tmp_path / "series.csv", tmp_path / "graph.csv", LayoutSpec(), tmp_path / "mask.csv")


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    g = Graph.from_edge_list(3, [(0, 1), (1, 2)])
    vals = rng.normal(size=(20, 3, 16)) * 1e3
    masks = (rng.random(vals.shape) > 0.3).astype(np.uint8)
    ds = NetsDataset(g, vals, masks, 8, truth=vals)
    save_dataset(ds, tmp_path / "d")
    back = load_dataset_dir(tmp_path / "d")
    np.testing.assert_array_equal(back.values, ds.values)
    np.testing.assert_array_equal(back.masks, ds.masks)
    np.testing.assert_array_equal(back.truth, ds.truth)
    assert back.graph == g
    for k in ds.split:
        np.testing.assert_array_equal(back.split[k], ds.split[k])
