import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from netsimpgan.core import (
    Graph,
    LayoutSpec,
    Mask,
    NetsDataset,
    NetsSample,
    apply_masking_operator,
    contiguous_split,
    make_prediction_mask,
    prediction_mask_array,
    unwindow,
    window_series,
)


def test_graph_canonicalises_and_deduplicates():
    g = Graph.from_edge_list(3, [(1, 0), (0, 1), (2, 1)])
    assert g.edges == frozenset({(0, 1), (1, 2)})
    assert g.neighbors(1) == [0, 2]
    np.testing.assert_array_equal(g.degrees(), [1, 2, 1])


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 3)], [(-1, 1)]])
def test_graph_rejects_bad_edges(edges):
    with pytest.raises(ValueError):
        Graph.from_edge_list(3, edges)


def test_graph_weights_and_adjacency():
    g = Graph.from_edge_list(3, [(0, 1, 2.5), (1, 2, 0.5)])
    adj = g.adjacency(weighted=True)
    assert adj[0, 1] == adj[1, 0] == 2.5
    assert g.adjacency()[1, 2] == 1.0
    with pytest.raises(ValueError):
        Graph(2, frozenset({(0, 1)}), {(0, 1): -1.0})


def test_bfs_order_ascending_ties(path4):
    assert path4.bfs_order(1) == [1, 0, 2, 3]
    star = Graph.from_edge_list(4, [(0, 3), (0, 1), (0, 2)])
    assert star.bfs_order(0) == [0, 1, 2, 3]


def test_graph_permuted_relabels():
    g = Graph.from_edge_list(3, [(0, 1)])
    # old node 2 -> 0, old 0 -> 1, old 1 -> 2
    assert g.permuted([2, 0, 1]).edges == frozenset({(1, 2)})


def test_mask_validation():
    with pytest.raises(ValueError):
        Mask(np.array([[0, 2]]), 1, 1)
    with pytest.raises(ValueError):
        Mask(np.ones((2, 4)), 2, 1)
    with pytest.raises(ValueError):
        Mask(np.ones((2, 4)), 0, 4)


def test_prediction_mask_all_ones():
    m = make_prediction_mask(Mask(np.ones((3, 4)), 2, 2))
    np.testing.assert_array_equal(m.values, [[1, 1, 0, 0]] * 3)
    assert (m.t_history, m.t_future) == (2, 2)


def test_prediction_mask_all_zeros():
    m = make_prediction_mask(Mask(np.zeros((3, 4)), 2, 2))
    assert not m.values.any()


def test_prediction_mask_zero_count():
    V = 5
    vals = np.ones((V, 16))
    vals[0, 1] = 0
    m = make_prediction_mask(Mask(vals, 8, 8))
    assert m.values[0, 1] == 0
    assert not m.future.any()
    assert (m.values == 0).sum() == V * 8 + 1


def test_masking_operator_examples():
    X = np.array([[3.0, 5.0]])
    np.testing.assert_array_equal(apply_masking_operator(X, np.array([[1, 0]]), -7), [[3, -7]])
    np.testing.assert_array_equal(apply_masking_operator(X, np.ones((1, 2)), 0), X)
    np.testing.assert_array_equal(apply_masking_operator(X, np.zeros((1, 2)), 0), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        apply_masking_operator(X, np.ones((2, 2)))


masks = arrays(np.uint8, st.tuples(st.integers(1, 5), st.integers(2, 9)), elements=st.integers(0, 1))


@given(masks, st.floats(-10, 10))
def test_masking_operator_idempotent(m, tau):
    X = np.random.default_rng(0).normal(size=m.shape)
    once = apply_masking_operator(X, m, tau)
    np.testing.assert_array_equal(apply_masking_operator(once, m, tau), once)


@given(masks)
def test_mask_complement_and_containment(m):
    th = max(1, m.shape[1] // 2)
    mask = Mask(m, th, m.shape[1] - th)
    np.testing.assert_array_equal(mask.values + mask.complement, np.ones(m.shape))
    assert (make_prediction_mask(mask).values <= mask.values).all()
    np.testing.assert_array_equal(prediction_mask_array(m[None], th)[0], make_prediction_mask(mask).values)


def test_sample_zeroes_carriers():
    g = Graph(2)
    vals = np.array([[1.0, np.nan], [np.inf, 4.0]])
    s = NetsSample(g, vals, Mask(np.array([[1, 0], [0, 1]]), 1, 1))
    np.testing.assert_array_equal(s.values, [[1, 0], [0, 4]])
    with pytest.raises(ValueError):
        NetsSample(g, vals, Mask(np.ones((2, 2)), 1, 1))


def test_window_count_example():
    series = np.arange(32 * 3, dtype=float).reshape(32, 3)
    w = window_series(series, 16, 16)
    assert w.shape == (2, 3, 16)
    np.testing.assert_array_equal(w[1, 2], series[16:, 2])


@given(st.integers(1, 6), st.integers(1, 5), st.integers(2, 8))
@settings(max_examples=50)
def test_windowing_lossless(n, V, t):
    series = np.random.default_rng(n).normal(size=(n * t, V))
    np.testing.assert_array_equal(unwindow(window_series(series, t, t)), series)


def test_contiguous_split_90_5_5():
    split = contiguous_split(100, (0.9, 0.05, 0.05))
    np.testing.assert_array_equal(split["train"], np.arange(90))
    np.testing.assert_array_equal(split["validation"], np.arange(90, 95))
    np.testing.assert_array_equal(split["test"], np.arange(95, 100))


def test_layout_validation():
    with pytest.raises(ValueError):
        LayoutSpec(t_total=16, t_history=16)
    with pytest.raises(ValueError):
        LayoutSpec(split=(0.5, 0.5, 0.5))
    assert LayoutSpec().t_future == 8


def test_dataset_invariants():
    g = Graph(2)
    vals = np.ones((4, 2, 4))
    ds = NetsDataset(g, vals, np.ones_like(vals), 2)
    assert len(ds) == 4 and ds.t_future == 2
    assert sum(len(v) for v in ds.split.values()) == 4
    with pytest.raises(ValueError):
        NetsDataset(g, vals, np.ones_like(vals), 2, {"train": [0, 1], "validation": [1], "test": [3]})
    with pytest.raises(ValueError):
        NetsDataset(Graph(3), vals, np.ones_like(vals), 2)
    sub = ds.subset("train")
    assert len(sub) == len(ds.split["train"])
    assert ds.sample(0).mask.t_history == 2
