import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from netsimpgan import Graph, NetsImpGAN, PredictionEnsemble
from netsimpgan.core import prediction_mask_array

SMALL = dict(t_history=6, depth=2, base_channels=4, noise_dim=8, epochs=1, batch_size=4, n_samples=3)


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    x = 50 + 10 * rng.normal(size=(8, 4, 8))
    m = (rng.random(x.shape) > 0.2).astype(np.uint8)
    return x, m


@pytest.fixture(scope="module")
def fitted(data):
    x, m = data
    g = Graph.from_edge_list(4, [(0, 1), (1, 2), (2, 3)])
    return NetsImpGAN(g, **SMALL).fit(x, m)


def test_params_and_clone():
    est = NetsImpGAN(variant="no-graph", epochs=3)
    params = est.get_params()
    assert params["variant"] == "no-graph" and params["epochs"] == 3
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(beta=2.0)
    assert est.beta == 2.0


def test_unfitted_raises(data):
    with pytest.raises(NotFittedError):
        NetsImpGAN().predict(*data)


def test_sample_preserves_history_and_spreads_future(fitted, data):
    x, m = data
    ens = fitted.sample(x, m)
    assert isinstance(ens, PredictionEnsemble)
    assert ens.samples.shape == (8, 3, 4, 8) and ens.n_members == 3
    m_star = prediction_mask_array(m, 6).astype(bool)
    np.testing.assert_array_equal(ens.mask_star, m_star)
    for k in range(3):
        np.testing.assert_array_equal(ens.samples[:, k][m_star], x[m_star])
    assert (ens.samples[:, 0][~m_star] != ens.samples[:, 1][~m_star]).any()
    assert np.isfinite(ens.samples).all()


def test_predict_and_transform(fitted, data):
    x, m = data
    for metric in ("mae", "rmse", "mape"):
        assert fitted.predict(x, m, metric).shape == x.shape
    np.testing.assert_array_equal(fitted.transform(x, m), fitted.sample(x, m).point("rmse"))


def test_nan_marks_missing(fitted, data):
    x, m = data
    with_nan = np.where(m == 1, x, np.nan)
    np.testing.assert_array_equal(fitted.sample(with_nan).samples, fitted.sample(x, m).samples)


def test_seeded_determinism(data):
    x, m = data
    a = NetsImpGAN(**SMALL, random_state=5).fit(x, m)
    b = NetsImpGAN(**SMALL, random_state=5).fit(x, m)
    assert a.history_ == b.history_
    np.testing.assert_array_equal(a.sample(x, m).samples, b.sample(x, m).samples)
    np.testing.assert_array_equal(a.sample(x, m, random_state=1).samples, b.sample(x, m, random_state=1).samples)


def test_save_load_round_trip(fitted, data, tmp_path):
    x, m = data
    path = fitted.save(tmp_path / "est.pt")
    loaded = NetsImpGAN.load(path)
    assert loaded.get_params(deep=False) | {"graph": None} == fitted.get_params(deep=False) | {"graph": None}
    assert loaded.graph == fitted.graph
    np.testing.assert_array_equal(loaded.sample(x, m).samples, fitted.sample(x, m).samples)


def test_input_validation(fitted, data):
    x, m = data
    with pytest.raises(ValueError):
        fitted.sample(x[:, :3], m[:, :3])
    with pytest.raises(ValueError):
        NetsImpGAN(**(SMALL | {"t_history": 8})).fit(x, m)
