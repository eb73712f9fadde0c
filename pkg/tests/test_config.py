from pathlib import Path

import pytest

from netsimpgan.config import (
    EVAL_METRICS,
    GAN_METHOD,
    OUTPUT_ENV,
    ConfigError,
    load_config,
    parse_config,
)

FULL = """
[experiment]
name = demo
seed = 7

[data]
n_nodes = 6
t_total = 320
graph = ring
gamma = 0.1
offset_range = 0, 10

[layout]
t_total = 16
t_history = 8

[pattern]
kind = sv-block
rate = 0.25, 0.5

[model]
variant = w/o-G
depth = 2

[train]
epochs = 3
batch_size = 8
harden_fake_masks = yes

[evaluate]
methods = nets-impgan, mean, LO
tasks = predict, impute
metrics = mae, wd
n_samples = 4

[output]
dir = out
plots = true
"""


def test_defaults(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    cfg = parse_config("")
    assert cfg.name == "experiment" and cfg.seed == 0
    assert cfg.pattern.kind == "mv-block" and cfg.rates == (0.25,)
    assert cfg.model.variant == "full"
    assert cfg.evaluate.methods[0] == GAN_METHOD and len(cfg.evaluate.methods) == 6
    assert cfg.output_dir == Path("runs") / "experiment"
    assert cfg.trains_model
    assert "wd" in EVAL_METRICS


def test_full_config(tmp_path):
    cfg = parse_config(FULL, base_dir=tmp_path)
    assert cfg.name == "demo" and cfg.seed == 7
    assert cfg.synth.n_nodes == 6 and cfg.synth.graph == "ring" and cfg.synth.offset_range == (0.0, 10.0)
    assert cfg.synth.seed == 7 and cfg.pattern.seed == 7 and cfg.train.seed == 7 and cfg.evaluate.seed == 7
    assert cfg.gamma == 0.1
    assert cfg.rates == (0.25, 0.5) and cfg.pattern_at(0.5).rate == 0.5 and cfg.pattern.kind == "sv-block"
    assert cfg.model.variant == "no-graph" and cfg.model.depth == 2
    assert cfg.train.epochs == 3 and cfg.train.harden_fake_masks is True
    assert cfg.evaluate.methods == (GAN_METHOD, "mean", "lo")
    assert cfg.evaluate.tasks == ("predict", "impute") and cfg.evaluate.metrics == ("mae", "wd")
    assert cfg.output_dir == tmp_path / "out" and cfg.plots is True
    assert cfg.synth.layout == cfg.layout


def test_output_env(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
    assert parse_config("[experiment]\nname = x").output_dir == tmp_path / "x"


def test_explicit_seeds_win():
    cfg = parse_config("[experiment]\nseed = 3\n[train]\nseed = 9\n[pattern]\nseed = 4")
    assert cfg.train.seed == 9 and cfg.pattern.seed == 4 and cfg.synth.seed == 3


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1",
    "[train]\nepochz = 3",
    "[model]\nvariant = no-everything",
    "[pattern]\nkind = checkerboard",
    "[pattern]\nrate = 1.5",
    "[pattern]\nshape = 2",
    "[evaluate]\nmethods = brits",
    "[evaluate]\ntasks = forecast",
    "[evaluate]\nmetrics = r2",
    "[evaluate]\nn_samples = 0",
    "[data]\nsource = database",
    "[data]\nsource = path",
    "[data]\nsource = path\npath = /nonexistent/dir",
    "[data]\ngamma = -1",
    "[data]\nself_coef = 0.9\ndiffusion_coef = 0.9",
    "[layout]\nt_history = 16",
    "[train]\nepochs = many",
    "[train]\nharden_fake_masks = maybe",
    "[output]\ncolour = red",
    "[experiment]\nowner = me",
    "not an ini file",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "missing.ini")
    data = tmp_path / "data"
    data.mkdir()
    path = tmp_path / "exp.ini"
    path.write_text("[data]\nsource = path\npath = data\n")
    cfg = load_config(path)
    assert cfg.source == "path" and cfg.data_path == data
