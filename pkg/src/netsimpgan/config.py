"""Experiment configuration files (INI: ``key = value`` lines under sections).

Sections and keys::

    [experiment]  name, seed
    [data]        source (synthetic|path), path, gamma, n_nodes, t_total, graph,
                  radius, self_coef, diffusion_coef, period, amplitude,
                  noise_std, offset_range, scale_range, burn_in, seed
    [layout]      t_total, t_history, window_stride, split
    [pattern]     kind, rate (one value or a comma list), bounds, seed
    [model]       variant, depth, base_channels, n_heads, noise_dim
    [train]       any TrainConfig field
    [evaluate]    methods, tasks, metrics, n_samples, split, seed
    [output]      dir, plots

Seeds left unset in ``[data]``, ``[pattern]``, ``[train]`` and ``[evaluate]``
default to ``[experiment] seed``.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .baselines import BASELINES
from .core import LayoutSpec
from .gtan import canonical_variant
from .metrics import METRICS
from .missingness import MissingPattern
from .synth import SynthSpec
from .training import TrainConfig

OUTPUT_ENV = "NETSIMPGAN_OUTPUT"
GAN_METHOD = "nets-impgan"
TASKS = ("predict", "impute")
EVAL_METRICS = METRICS + ("wd",)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "runs"))


@dataclass(frozen=True)
class ModelSpec:
    variant: str = "full"
    depth: int = 3
    base_channels: int = 16
    n_heads: int = 3
    noise_dim: int = 128


@dataclass(frozen=True)
class EvaluateSpec:
    methods: tuple = (GAN_METHOD,) + BASELINES
    tasks: tuple = ("predict",)
    metrics: tuple = ("mae", "rmse", "mape")
    n_samples: int = 10
    split: str = "test"
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    source: str = "synthetic"
    data_path: Path | None = None
    gamma: float = 0.0
    synth: SynthSpec = field(default_factory=SynthSpec)
    layout: LayoutSpec = field(default_factory=LayoutSpec)
    pattern: MissingPattern = field(default_factory=lambda: MissingPattern("mv-block", 0.25))
    rates: tuple = (0.25,)
    model: ModelSpec = field(default_factory=ModelSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    evaluate: EvaluateSpec = field(default_factory=EvaluateSpec)
    output_dir: Path = field(default_factory=default_output_root)
    plots: bool = False

    @property
    def trains_model(self) -> bool:
        return GAN_METHOD in self.evaluate.methods

    def pattern_at(self, rate: float) -> MissingPattern:
        return replace(self.pattern, rate=rate)


def _floats(text: str) -> tuple:
    return tuple(float(p) for p in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(p) for p in text.replace(",", " ").split())


def _names(text: str) -> tuple:
    return tuple(p.strip().lower() for p in text.split(",") if p.strip())


_SYNTH_KEYS = {f.name for f in fields(SynthSpec)} - {"layout"}
_TUPLE_KEYS = {"offset_range", "scale_range", "adam_betas"}


def _typed(key: str, raw: str, default):
    """Convert ``raw`` to the type of ``default`` (tuples from comma lists)."""
    if key in _TUPLE_KEYS or isinstance(default, tuple):
        return _floats(raw)
    if isinstance(default, bool):
        if raw.strip().lower() in ("1", "true", "yes", "on"):
            return True
        if raw.strip().lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw.strip()


def _section_kwargs(parser, section: str, defaults, allowed: set, skip=()) -> dict:
    if not parser.has_section(section):
        return {}
    out = {}
    for key, raw in parser.items(section):
        if key in skip:
            continue
        if key not in allowed:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        try:
            out[key] = _typed(key, raw, getattr(defaults, key))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None
    return out


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = {"experiment", "data", "layout", "pattern", "model", "train", "evaluate", "output"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigError(f"unknown config sections {sorted(extra)}")
    base_dir = Path(".") if base_dir is None else Path(base_dir)
    get = lambda sec, key, fb=None: parser.get(sec, key, fallback=fb)  # noqa: E731

    try:
        seed = int(get("experiment", "seed", "0"))
        name = get("experiment", "name", "experiment")

        layout_kw = _section_kwargs(parser, "layout", LayoutSpec(), {f.name for f in fields(LayoutSpec)})
        layout = LayoutSpec(**layout_kw)

        synth_defaults = SynthSpec()
        synth_kw = _section_kwargs(parser, "data", synth_defaults, _SYNTH_KEYS, skip={"source", "path", "gamma"})
        synth_kw.setdefault("seed", seed)
        synth = SynthSpec(**synth_kw, layout=layout)
        source = get("data", "source", "synthetic").strip().lower()
        if source not in ("synthetic", "path"):
            raise ConfigError(f"[data] source must be 'synthetic' or 'path', got {source!r}")
        data_path = None
        if source == "path":
            raw = get("data", "path")
            if not raw:
                raise ConfigError("[data] source = path needs a 'path' key")
            data_path = Path(raw) if Path(raw).is_absolute() else base_dir / raw
            if not data_path.is_dir():
                raise ConfigError(f"[data] path {data_path} does not exist")
        gamma = float(get("data", "gamma", "0"))
        if gamma < 0:
            raise ConfigError("[data] gamma must be non-negative")

        if parser.has_section("pattern"):
            allowed = {"kind", "rate", "bounds", "seed"}
            unknown = set(parser.options("pattern")) - allowed
            if unknown:
                raise ConfigError(f"[pattern] unknown keys {sorted(unknown)}")
        rates = _floats(get("pattern", "rate", "0.25"))
        if not rates:
            raise ConfigError("[pattern] rate is empty")
        bounds = get("pattern", "bounds")
        pattern = MissingPattern(
            get("pattern", "kind", "mv-block"),
            rates[0],
            _ints(bounds) if bounds else None,
            int(get("pattern", "seed", str(seed))),
        )
        for r in rates:
            MissingPattern(pattern.kind, r, pattern.bounds, pattern.seed)

        model_kw = _section_kwargs(parser, "model", ModelSpec(), {f.name for f in fields(ModelSpec)})
        model = ModelSpec(**model_kw)
        canonical_variant(model.variant)
        model = replace(model, variant=canonical_variant(model.variant))

        train_kw = _section_kwargs(parser, "train", TrainConfig(), {f.name for f in fields(TrainConfig)})
        train_kw.setdefault("seed", seed)
        train = TrainConfig(**train_kw)

        ev = EvaluateSpec()
        ev_kw = {}
        if parser.has_section("evaluate"):
            allowed = {f.name for f in fields(EvaluateSpec)}
            for key, raw in parser.items("evaluate"):
                if key not in allowed:
                    raise ConfigError(f"[evaluate] unknown key {key!r}")
                if key in ("methods", "tasks", "metrics"):
                    ev_kw[key] = _names(raw)
                elif key == "split":
                    ev_kw[key] = raw.strip()
                else:
                    ev_kw[key] = int(raw)
        ev_kw.setdefault("seed", seed)
        ev = replace(ev, **ev_kw)
        bad = [m for m in ev.methods if m != GAN_METHOD and m not in BASELINES]
        if bad or not ev.methods:
            raise ConfigError(f"[evaluate] unknown methods {bad}; choose from {(GAN_METHOD,) + BASELINES}")
        if not ev.tasks or any(t not in TASKS for t in ev.tasks):
            raise ConfigError(f"[evaluate] tasks must be drawn from {TASKS}")
        if not ev.metrics or any(m not in EVAL_METRICS for m in ev.metrics):
            raise ConfigError(f"[evaluate] metrics must be drawn from {EVAL_METRICS}")
        if ev.split not in ("train", "validation", "test"):
            raise ConfigError("[evaluate] split must be train, validation or test")
        if ev.n_samples < 1:
            raise ConfigError("[evaluate] n_samples must be >= 1")

        out_raw = get("output", "dir")
        if out_raw is None:
            output_dir = default_output_root() / name
        else:
            output_dir = Path(out_raw) if Path(out_raw).is_absolute() else base_dir / out_raw
        plots = _typed("plots", get("output", "plots", "false"), False)
        if parser.has_section("output"):
            unknown = set(parser.options("output")) - {"dir", "plots"}
            if unknown:
                raise ConfigError(f"[output] unknown keys {sorted(unknown)}")
        unknown = set(parser.options("experiment")) - {"name", "seed"} if parser.has_section("experiment") else set()
        if unknown:
            raise ConfigError(f"[experiment] unknown keys {sorted(unknown)}")
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    return ExperimentConfig(
        name=name, seed=seed, source=source, data_path=data_path, gamma=gamma, synth=synth, layout=layout,
        pattern=pattern, rates=rates, model=model, train=train, evaluate=ev, output_dir=output_dir, plots=plots,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text(), base_dir=path.parent)
