"""Experiment pipeline: data, masks, training, ensembles, evaluation tables, plots.

Results CSV schema (``results.csv``), one row per cell::

    method,task,pattern,rate,gamma,metric,value

Multi-step CSV schema (``multistep.csv``), prediction task only::

    method,pattern,rate,gamma,metric,step,value

``step`` counts future timestamps from 1 to ``T_future``.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import baseline_fill
from .config import GAN_METHOD, ExperimentConfig
from .core import NetsDataset, prediction_mask_array
from .estimator import NetsImpGAN
from .io import load_dataset_dir, save_dataset
from .metrics import per_step, point_predict, score, wasserstein_distance
from .missingness import MissingPattern, mask_dataset
from .synth import disrupt, generate

log = logging.getLogger(__name__)

RESULT_FIELDS = ("method", "task", "pattern", "rate", "gamma", "metric", "value")
MULTISTEP_FIELDS = ("method", "pattern", "rate", "gamma", "metric", "step", "value")
PREDICTIONS_FILE = "predictions.npz"


def build_dataset(cfg: ExperimentConfig) -> NetsDataset:
    """The dataset before simulated missingness, after the gamma disruption."""
    if cfg.source == "path":
        ds = load_dataset_dir(cfg.data_path, cfg.layout)
    else:
        ds = generate(cfg.synth)
    return disrupt(ds, cfg.gamma, seed=cfg.seed)


def apply_pattern(dataset: NetsDataset, pattern: MissingPattern) -> NetsDataset:
    """Simulate missingness on complete data; incomplete data keep their own masks."""
    if (dataset.masks == 1).all():
        return mask_dataset(dataset, pattern)
    return dataset


def known_truth(dataset: NetsDataset) -> tuple[np.ndarray, np.ndarray]:
    """``(truth, known)``: the complete data where available, else the observed entries."""
    if dataset.truth is not None:
        return dataset.truth, np.ones(dataset.masks.shape, dtype=bool)
    return dataset.values, dataset.masks == 1


def eval_mask(task: str, masks: np.ndarray, known: np.ndarray, t_history: int) -> np.ndarray:
    """Entries scored for ``task``.

    Prediction scores every future entry with known truth; imputation scores
    history entries that are missing from the input but known in the truth.
    """
    sel = np.zeros(masks.shape, dtype=bool)
    if task == "predict":
        sel[..., t_history:] = True
    elif task == "impute":
        sel[..., :t_history] = masks[..., :t_history] == 0
    else:
        raise ValueError(f"unknown task {task!r}")
    return sel & known


def baseline_target(task: str, masks: np.ndarray, t_history: int) -> np.ndarray:
    """Entries a baseline may read: the history alone for prediction, all observations for imputation."""
    return prediction_mask_array(masks, t_history) if task == "predict" else masks


def baseline_ensemble(kind: str, dataset: NetsDataset, task: str) -> np.ndarray:
    """Singleton ensembles ``(N, 1, V, T)`` from a training-free rule."""
    target = baseline_target(task, dataset.masks, dataset.t_history)
    filled = [baseline_fill(kind, x, m, dataset.graph) for x, m in zip(dataset.values, target)]
    return np.stack(filled)[:, None]


def evaluate_ensemble(samples: np.ndarray, truth: np.ndarray, sel: np.ndarray, metric: str,
                      t_history: int, task: str, known: np.ndarray | None = None) -> float:
    """Score an ``(N, K, V, T)`` ensemble on the entries selected by ``sel``.

    Point metrics use the metric-optimal point predictor. ``wd`` compares the
    ``N*K`` generated matrices with the ``N`` true ones on the task's columns
    (future for prediction, history for imputation) and needs ``known``, the
    entries where the truth is available, to cover those columns.
    """
    if metric == "wd":
        cols = slice(t_history, None) if task == "predict" else slice(None, t_history)
        if known is not None and not np.asarray(known)[..., cols].all():
            raise ValueError("wd needs complete ground truth on the evaluated columns")
        sub = samples[..., cols]
        return wasserstein_distance(sub.reshape(-1, *sub.shape[2:]), truth[..., cols])
    point = point_predict(np.moveaxis(samples, 1, 0), metric)
    return score(metric, point, truth, sel)


def multistep_report(samples: np.ndarray, truth: np.ndarray, sel: np.ndarray, metric: str,
                     t_history: int) -> np.ndarray:
    """Per-step metric over the future columns, index ``s`` holding step ``s + 1``."""
    point = point_predict(np.moveaxis(np.asarray(samples), 1, 0), metric)
    return per_step(metric, point, truth, sel, t_history)


def save_predictions(path, samples, masks, indices, t_history: int, method: str, task: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, samples=np.asarray(samples, dtype=float), masks=np.asarray(masks, dtype=np.uint8),
             indices=np.asarray(indices, dtype=int), t_history=np.int64(t_history),
             method=np.str_(method), task=np.str_(task))
    return path


@dataclass(frozen=True)
class Predictions:
    samples: np.ndarray
    masks: np.ndarray
    indices: np.ndarray
    t_history: int
    method: str
    task: str


def load_predictions(path) -> Predictions:
    path = Path(path)
    if path.is_dir():
        path = path / PREDICTIONS_FILE
    with np.load(path, allow_pickle=False) as data:
        return Predictions(data["samples"], data["masks"], data["indices"], int(data["t_history"]),
                           str(data["method"]), str(data["task"]))


def _fmt(x: float) -> str:
    return repr(float(x))


class ResultWriter:
    """Appends rows to a CSV, flushing after each so partial results survive failures."""

    def __init__(self, path, fieldnames):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.fieldnames = fieldnames
        with self.path.open("w", newline="") as fh:
            csv.writer(fh).writerow(fieldnames)

    def write(self, row: dict) -> None:
        with self.path.open("a", newline="") as fh:
            csv.writer(fh).writerow([row[k] for k in self.fieldnames])


def fit_model(cfg: ExperimentConfig, train: NetsDataset, out_dir=None) -> NetsImpGAN:
    t = cfg.train
    est = NetsImpGAN(
        graph=train.graph, t_history=train.t_history, variant=cfg.model.variant, depth=cfg.model.depth,
        base_channels=cfg.model.base_channels, n_heads=cfg.model.n_heads, noise_dim=cfg.model.noise_dim,
        tau=t.tau, batch_size=t.batch_size, epochs=t.epochs, learning_rate=t.learning_rate,
        adam_betas=tuple(t.adam_betas), beta=t.beta, gp_lambda=t.gp_lambda, disc_steps=t.disc_steps,
        gen_steps=t.gen_steps, alternation=t.alternation, harden_fake_masks=t.harden_fake_masks,
        recon_reduction=t.recon_reduction, n_samples=cfg.evaluate.n_samples, random_state=t.seed,
    )
    return est.fit(train.values, train.masks, out_dir=out_dir)


def run_experiment(cfg: ExperimentConfig, config_text: str | None = None) -> Path:
    """Run every (rate, method, task, metric) cell and write ``results.csv``.

    Returns the path of the results table. Rows are written as cells finish,
    so a failure leaves the completed part of the table on disk.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config_text is not None:
        (out / "config.ini").write_text(config_text)
    results = ResultWriter(out / "results.csv", RESULT_FIELDS)
    steps = ResultWriter(out / "multistep.csv", MULTISTEP_FIELDS)
    base = build_dataset(cfg)
    ev = cfg.evaluate
    for rate in cfg.rates:
        pattern = cfg.pattern_at(rate)
        ds = apply_pattern(base, pattern)
        cell_dir = out / f"{pattern.kind}_r{rate:g}"
        if cfg.layout.window_stride == cfg.layout.t_total:
            save_dataset(ds, cell_dir / "data", cfg.layout)
        test = ds.subset(ev.split)
        if len(test) == 0:
            raise ValueError(f"split {ev.split!r} is empty")
        truth, known = known_truth(test)
        ensembles = {}
        if GAN_METHOD in ev.methods:
            log.info("training %s at rate %g", GAN_METHOD, rate)
            est = fit_model(cfg, ds.subset("train"), out_dir=cell_dir / GAN_METHOD)
            est.save(cell_dir / GAN_METHOD / "model.pt")
            samples = est.sample(test.values, test.masks, ev.n_samples, ev.seed).samples
            for task in ev.tasks:
                ensembles[GAN_METHOD, task] = samples
        for method in ev.methods:
            if method == GAN_METHOD:
                continue
            for task in ev.tasks:
                ensembles[method, task] = baseline_ensemble(method, test, task)
        for (method, task), samples in ensembles.items():
            save_predictions(cell_dir / method / task / PREDICTIONS_FILE, samples, test.masks,
                             ds.split[ev.split], test.t_history, method, task)
            sel = eval_mask(task, test.masks, known, test.t_history)
            for metric in ev.metrics:
                value = evaluate_ensemble(samples, truth, sel, metric, test.t_history, task, known)
                results.write(dict(method=method, task=task, pattern=pattern.kind, rate=_fmt(rate),
                                   gamma=_fmt(cfg.gamma), metric=metric, value=_fmt(value)))
                if task == "predict" and metric != "wd":
                    series = multistep_report(samples, truth, sel, metric, test.t_history)
                    for s, v in enumerate(series, start=1):
                        steps.write(dict(method=method, pattern=pattern.kind, rate=_fmt(rate),
                                         gamma=_fmt(cfg.gamma), metric=metric, step=s, value=_fmt(v)))
    if cfg.plots:
        plot_results(out / "results.csv", out / "plots", out / "multistep.csv")
    return out / "results.csv"


def read_results(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("rate", "gamma", "value"):
            if key in row:
                row[key] = float(row[key])
        if "step" in row:
            row["step"] = int(row["step"])
    return rows


def summary_table(rows: list[dict]) -> str:
    """Plain-text pivot: one line per (task, pattern, rate, gamma, metric), one column per method."""
    methods = list(dict.fromkeys(r["method"] for r in rows))
    keys = list(dict.fromkeys((r["task"], r["pattern"], r["rate"], r["gamma"], r["metric"]) for r in rows))
    lookup = {(r["task"], r["pattern"], r["rate"], r["gamma"], r["metric"], r["method"]): r["value"] for r in rows}
    head = ["task", "pattern", "rate", "gamma", "metric"] + methods
    lines = ["\t".join(head)]
    for k in keys:
        cells = [f"{lookup[k + (m,)]:.4g}" if k + (m,) in lookup else "-" for m in methods]
        lines.append("\t".join([k[0], k[1], f"{k[2]:g}", f"{k[3]:g}", k[4]] + cells))
    return "\n".join(lines)


def plot_results(results_csv, out_dir, multistep_csv=None) -> list[Path]:
    """Line plots of metric vs missing rate and vs prediction step, built from the CSVs only."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    rows = read_results(results_csv)
    for task, pattern, metric in dict.fromkeys((r["task"], r["pattern"], r["metric"]) for r in rows):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        cell = [r for r in rows if (r["task"], r["pattern"], r["metric"]) == (task, pattern, metric)]
        for method in dict.fromkeys(r["method"] for r in cell):
            pts = sorted((r["rate"], r["value"]) for r in cell if r["method"] == method)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
        ax.set_xlabel("missing rate")
        ax.set_ylabel(metric.upper())
        ax.set_title(f"{task}, {pattern}")
        ax.legend(fontsize=7)
        path = out_dir / f"{task}_{pattern}_{metric}_vs_rate.png"
        fig.tight_layout()
        fig.savefig(path, dpi=100)
        plt.close(fig)
        written.append(path)
    if multistep_csv is not None and Path(multistep_csv).exists():
        steps = read_results(multistep_csv)
        for pattern, rate, metric in dict.fromkeys((r["pattern"], r["rate"], r["metric"]) for r in steps):
            fig, ax = plt.subplots(figsize=(5, 3.5))
            cell = [r for r in steps if (r["pattern"], r["rate"], r["metric"]) == (pattern, rate, metric)]
            for method in dict.fromkeys(r["method"] for r in cell):
                pts = sorted((r["step"], r["value"]) for r in cell if r["method"] == method)
                ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
            ax.set_xlabel("prediction step")
            ax.set_ylabel(metric.upper())
            ax.set_title(f"{pattern}, rate {rate:g}")
            ax.legend(fontsize=7)
            path = out_dir / f"multistep_{pattern}_r{rate:g}_{metric}.png"
            fig.tight_layout()
            fig.savefig(path, dpi=100)
            plt.close(fig)
            written.append(path)
    return written
