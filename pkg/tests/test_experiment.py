import numpy as np
import pytest

from netsimpgan import experiment
from netsimpgan.config import parse_config
from netsimpgan.experiment import (
    eval_mask,
    evaluate_ensemble,
    load_predictions,
    multistep_report,
    plot_results,
    read_results,
    run_experiment,
    save_predictions,
    summary_table,
)
from netsimpgan.io import save_dataset
from netsimpgan.synth import generate

SMALL = """
[experiment]
name = small
seed = 3
[data]
n_nodes = 4
t_total = 160
graph = ring
[layout]
split = 0.6, 0.2, 0.2
[pattern]
kind = {kind}
rate = {rates}
bounds = 1, 2, 1, 3
[model]
depth = 2
base_channels = 4
noise_dim = 8
[train]
epochs = 1
batch_size = 4
[evaluate]
methods = {methods}
tasks = predict, impute
metrics = mae, rmse, mape, wd
n_samples = 3
[output]
dir = {out}
"""


def small_config(tmp_path, out="run", methods="mean, tle, lo, na, tli", rates="0.25", kind="mv-block"):
    text = SMALL.format(out=out, methods=methods, rates=rates, kind=kind)
    return parse_config(text, base_dir=tmp_path), text


def test_baselines_only_run(tmp_path):
    cfg, text = small_config(tmp_path)
    path = run_experiment(cfg, text)
    rows = read_results(path)
    assert sorted({r["method"] for r in rows}) == ["lo", "mean", "na", "tle", "tli"]
    assert len(rows) == 5 * 2 * 4
    assert all(np.isfinite(r["value"]) and r["value"] >= 0 for r in rows)
    out = tmp_path / "run"
    assert (out / "config.ini").read_text() == text
    assert not list(out.rglob("model.pt"))
    cell = out / "mv-block_r0.25"
    assert (cell / "data" / "series.csv").exists()
    pred = load_predictions(cell / "lo" / "predict")
    assert pred.method == "lo" and pred.task == "predict" and pred.samples.shape[1] == 1
    steps = read_results(out / "multistep.csv")
    for method in ("mean", "lo"):
        assert sorted(r["step"] for r in steps if r["method"] == method and r["metric"] == "mae") == list(range(1, 9))
    table = summary_table(rows)
    assert table.splitlines()[0].split("\t")[5:] == ["mean", "tle", "lo", "na", "tli"]


def test_rerun_is_byte_identical(tmp_path):
    a, text = small_config(tmp_path, out="a", methods="nets-impgan, mean, lo")
    b, _ = small_config(tmp_path, out="b", methods="nets-impgan, mean, lo")
    run_experiment(a, text)
    run_experiment(b, text)
    for name in ("results.csv", "multistep.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_gan_cell_artifacts(tmp_path):
    cfg, text = small_config(tmp_path, methods="nets-impgan, mean")
    rows = read_results(run_experiment(cfg, text))
    gan = [r for r in rows if r["method"] == "nets-impgan"]
    assert len(gan) == 8 and all(np.isfinite(r["value"]) for r in gan)
    cell = tmp_path / "run" / "mv-block_r0.25" / "nets-impgan"
    assert (cell / "model.pt").exists() and (cell / "losses.csv").exists()
    assert load_predictions(cell / "impute").samples.shape[1] == 3


def test_rate_sweep(tmp_path):
    rates = "0.02, 0.04, 0.06, 0.08, 0.10, 0.25, 0.5, 0.75"
    cfg, text = small_config(tmp_path, methods="mean", rates=rates, kind="random")
    rows = read_results(run_experiment(cfg, text))
    assert sorted({r["rate"] for r in rows}) == [0.02, 0.04, 0.06, 0.08, 0.1, 0.25, 0.5, 0.75]


def test_failure_keeps_partial_results(tmp_path, monkeypatch):
    cfg, text = small_config(tmp_path)
    calls = []
    real = experiment.evaluate_ensemble

    def flaky(*args, **kw):
        calls.append(1)
        if len(calls) > 3:
            raise RuntimeError("boom")
        return real(*args, **kw)

    monkeypatch.setattr(experiment, "evaluate_ensemble", flaky)
    with pytest.raises(RuntimeError):
        run_experiment(cfg, text)
    assert len(read_results(tmp_path / "run" / "results.csv")) == 3


def test_path_source(tmp_path):
    cfg, _ = small_config(tmp_path)
    save_dataset(generate(cfg.synth), tmp_path / "data", cfg.layout)
    text = SMALL.format(out="run", methods="mean", rates="0.25", kind="random") + "\n"
    text = text.replace("[data]\n", "[data]\nsource = path\npath = data\n")
    cfg = parse_config(text, base_dir=tmp_path)
    rows = read_results(run_experiment(cfg))
    assert {r["method"] for r in rows} == {"mean"}


def test_multistep_profiles():
    truth = np.random.default_rng(0).normal(size=(3, 2, 12))
    sel = np.zeros(truth.shape, bool)
    sel[..., 4:] = True
    perfect = truth[:, None].repeat(2, axis=1)
    np.testing.assert_array_equal(multistep_report(perfect, truth, sel, "mae", 4), np.zeros(8))
    offset = truth.copy()
    offset[..., 4:] += np.arange(1, 9)
    out = multistep_report(offset[:, None], truth, sel, "mae", 4)
    np.testing.assert_allclose(out, np.arange(1, 9), atol=1e-12)
    assert len(out) == 8


def test_eval_mask_semantics():
    masks = np.ones((1, 2, 6), np.uint8)
    masks[0, 0, 1] = 0
    masks[0, 1, 4] = 0
    known = np.ones_like(masks, bool)
    known[0, 1, 5] = False
    pred = eval_mask("predict", masks, known, 3)
    assert pred[..., :3].sum() == 0 and pred.sum() == 5
    imp = eval_mask("impute", masks, known, 3)
    assert imp.sum() == 1 and imp[0, 0, 1]
    with pytest.raises(ValueError):
        eval_mask("forecast", masks, known, 3)


def test_wd_scores_task_columns():
    truth = np.zeros((4, 2, 6))
    samples = np.zeros((4, 2, 2, 6))
    samples[..., 3:] = 1.0
    sel = np.zeros(truth.shape, bool)
    known = np.ones(truth.shape, bool)
    assert evaluate_ensemble(samples, truth, sel, "wd", 3, "predict", known) == 1.0
    assert evaluate_ensemble(samples, truth, sel, "wd", 3, "impute", known) == 0.0
    known[0, 0, 4] = False
    assert evaluate_ensemble(samples, truth, sel, "wd", 3, "impute", known) == 0.0
    with pytest.raises(ValueError):
        evaluate_ensemble(samples, truth, sel, "wd", 3, "predict", known)


def test_predictions_round_trip(tmp_path):
    s = np.random.default_rng(1).normal(size=(2, 3, 4, 6))
    path = save_predictions(tmp_path / "p" / "predictions.npz", s, np.ones((2, 4, 6)), [5, 7], 3, "lo", "impute")
    p = load_predictions(path.parent)
    np.testing.assert_array_equal(p.samples, s)
    assert list(p.indices) == [5, 7] and p.t_history == 3 and p.task == "impute"


def test_plots_from_csv(tmp_path):
    cfg, text = small_config(tmp_path, methods="mean, lo", rates="0.1, 0.25", kind="random")
    path = run_experiment(cfg, text)
    written = plot_results(path, tmp_path / "plots", tmp_path / "run" / "multistep.csv")
    assert written and all(p.suffix == ".png" and p.stat().st_size > 0 for p in written)
