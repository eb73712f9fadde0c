"""Command line interface.

Exit codes: 0 success, 1 configuration or input error, 2 runtime failure.
The default output root for ``run`` is taken from ``$NETSIMPGAN_OUTPUT``
(``./runs`` when unset).
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import torch

from .baselines import BASELINES
from .config import EVAL_METRICS, OUTPUT_ENV, ConfigError, ExperimentConfig, load_config, parse_config
from .estimator import NetsImpGAN
from .experiment import (
    PREDICTIONS_FILE,
    RESULT_FIELDS,
    apply_pattern,
    baseline_ensemble,
    build_dataset,
    eval_mask,
    evaluate_ensemble,
    fit_model,
    known_truth,
    load_predictions,
    plot_results,
    read_results,
    run_experiment,
    save_predictions,
    summary_table,
)
from .io import DataFormatError, load_dataset_dir, save_dataset
from .missingness import MissingPattern
from .training import CheckpointError

log = logging.getLogger("netsimpgan")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _config(args) -> ExperimentConfig:
    return load_config(args.config) if getattr(args, "config", None) else parse_config("")


def _dataset(path):
    if not Path(path).is_dir():
        raise ConfigError(f"data directory {path} does not exist")
    return load_dataset_dir(path)


def cmd_gen_data(args) -> int:
    cfg = load_config(args.spec)
    ds = build_dataset(replace(cfg, source="synthetic"))
    out = save_dataset(ds, args.out, cfg.layout)
    print(f"wrote {len(ds)} samples of shape {ds.values.shape[1:]} to {out}")
    return EXIT_OK


def _pattern(args) -> MissingPattern:
    if args.config:
        cfg = load_config(args.config)
        pattern = cfg.pattern
    else:
        pattern = MissingPattern()
    try:
        return MissingPattern(
            args.kind or pattern.kind,
            pattern.rate if args.rate is None else args.rate,
            tuple(args.bounds) if args.bounds else pattern.bounds,
            pattern.seed if args.seed is None else args.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_gen_masks(args) -> int:
    ds = _dataset(args.data)
    pattern = _pattern(args)
    if (ds.masks == 0).any():
        raise ConfigError(f"{args.data} already carries a mask; gen-masks needs complete data")
    masked = apply_pattern(ds, pattern)
    save_dataset(masked, args.out)
    rate = 1 - masked.masks.mean()
    print(f"{pattern.kind} masks at rate {pattern.rate:g} (empirical {rate:.4f}) written to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    ds = _dataset(args.data)
    out = Path(args.out)
    est = fit_model(cfg, ds.subset("train"), out_dir=out)
    path = est.save(out / "model.pt")
    last = est.history_[-1] if est.history_ else {}
    print(f"trained {cfg.train.epochs} epochs; model saved to {path}; final losses {last}")
    return EXIT_OK


def _split_or_fail(ds, split):
    sub = ds.subset(split)
    if len(sub) == 0:
        raise ConfigError(f"split {split!r} is empty")
    return sub


def _cmd_sample(args, task: str) -> int:
    if not Path(args.ckpt).is_file():
        raise ConfigError(f"checkpoint {args.ckpt} does not exist")
    est = NetsImpGAN.load(args.ckpt)
    ds = _dataset(args.data)
    sub = _split_or_fail(ds, args.split)
    samples = est.sample(sub.values, sub.masks, args.k, args.seed).samples
    path = save_predictions(Path(args.out) / PREDICTIONS_FILE, samples, sub.masks, ds.split[args.split],
                            sub.t_history, "nets-impgan", task)
    print(f"wrote {samples.shape[1]} completions for {samples.shape[0]} samples to {path}")
    return EXIT_OK


def cmd_predict(args) -> int:
    return _cmd_sample(args, "predict")


def cmd_impute(args) -> int:
    return _cmd_sample(args, "impute")


def cmd_baseline(args) -> int:
    ds = _dataset(args.data)
    sub = _split_or_fail(ds, args.split)
    samples = baseline_ensemble(args.kind, sub, args.task)
    path = save_predictions(Path(args.out) / PREDICTIONS_FILE, samples, sub.masks, ds.split[args.split],
                            sub.t_history, args.kind, args.task)
    print(f"wrote {args.kind} {args.task} fills for {samples.shape[0]} samples to {path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pred_path = Path(args.pred)
    if not (pred_path / PREDICTIONS_FILE).is_file() and not pred_path.is_file():
        raise ConfigError(f"no {PREDICTIONS_FILE} under {pred_path}")
    pred = load_predictions(pred_path)
    ds = _dataset(args.truth)
    truth, known = known_truth(ds)
    truth, known = truth[pred.indices], known[pred.indices]
    if truth.shape != pred.samples.shape[:1] + pred.samples.shape[2:]:
        raise ConfigError("predictions and truth dataset disagree in shape")
    sel = eval_mask(pred.task, pred.masks, known, pred.t_history)
    rows = []
    for metric in args.metric:
        value = evaluate_ensemble(pred.samples, truth, sel, metric, pred.t_history, pred.task, known)
        rows.append(dict(method=pred.method, task=pred.task, pattern="given", rate=repr(float(1 - pred.masks.mean())),
                         gamma=repr(0.0), metric=metric, value=repr(float(value))))
    out = Path(args.out) if args.out else pred_path / "results.csv" if pred_path.is_dir() else None
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
            writer.writeheader()
            writer.writerows(rows)
    for row in rows:
        print(f"{row['method']}\t{row['task']}\t{row['metric']}\t{float(row['value']):.6g}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg = replace(cfg, output_dir=Path(args.out))
    path = run_experiment(cfg, Path(args.config).read_text())
    print(summary_table(read_results(path)))
    print(f"results written to {path}")
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.results)
    if path.is_dir():
        path = path / "results.csv"
    if not path.is_file():
        raise ConfigError(f"results table {path} does not exist")
    print(summary_table(read_results(path)))
    if args.plots:
        steps = path.parent / "multistep.csv"
        written = plot_results(path, Path(args.plots), steps if steps.exists() else None)
        print(f"wrote {len(written)} plots to {args.plots}")
    return EXIT_OK


def _metric_list(text: str) -> list:
    names = [m.strip().lower() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in EVAL_METRICS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"metrics must be drawn from {EVAL_METRICS}")
    return names


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="netsimpgan", description="Prediction and imputation of networked time series.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    p.add_argument("--threads", type=int, default=1, help="torch intra-op threads (1 keeps runs bit-reproducible)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen-data", help="generate a complete synthetic dataset")
    s.add_argument("--spec", required=True, help="config file with [data] and [layout] sections")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("gen-masks", help="simulate missingness on a complete dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="take the [pattern] section from this file")
    s.add_argument("--kind", help="random, sf-block, sv-block or mv-block")
    s.add_argument("--rate", type=float)
    s.add_argument("--bounds", type=int, nargs=4, metavar=("LV", "UV", "LT", "UT"))
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_gen_masks)

    s = sub.add_parser("train", help="train the adversarial imputer on the train split")
    s.add_argument("--config", help="experiment config; [model] and [train] are used")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    for name, func, what in (("predict", cmd_predict, "forecast the future"),
                             ("impute", cmd_impute, "fill missing history")):
        s = sub.add_parser(name, help=f"draw an ensemble to {what}")
        s.add_argument("--ckpt", required=True)
        s.add_argument("--data", required=True)
        s.add_argument("--out", required=True)
        s.add_argument("--k", type=int, default=10, help="ensemble size")
        s.add_argument("--split", default="test", choices=("train", "validation", "test"))
        s.add_argument("--seed", type=int, default=0)
        s.set_defaults(func=func)

    s = sub.add_parser("baseline", help="apply a training-free fill rule")
    s.add_argument("--kind", required=True, choices=BASELINES)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--task", default="predict", choices=("predict", "impute"))
    s.add_argument("--split", default="test", choices=("train", "validation", "test"))
    s.set_defaults(func=cmd_baseline)

    s = sub.add_parser("evaluate", help="score a predictions file against ground truth")
    s.add_argument("--pred", required=True, help=f"directory holding {PREDICTIONS_FILE}, or the file")
    s.add_argument("--truth", required=True, help="dataset directory with the ground truth")
    s.add_argument("--metric", type=_metric_list, default=["mae", "rmse", "mape"],
                   help="comma list of mae, rmse, mape, wd")
    s.add_argument("--out", help="results CSV path (default: next to the predictions)")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("run", help="full pipeline from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV}/<name>)")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("report", help="summarise a results table and optionally plot it")
    s.add_argument("--results", required=True, help="results.csv or the run directory")
    s.add_argument("--plots", help="directory for plot images")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    torch.set_num_threads(max(1, args.threads))
    try:
        return args.func(args)
    except (ConfigError, DataFormatError, CheckpointError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # every other failure is a runtime failure
        log.debug("traceback", exc_info=True)
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
