"""Command-line interface.

Subcommands: train, evaluate, predict, bench-directions, toy-sin.  Options
can come from a JSON config file (--config) with individual flags taking
precedence; the seed falls back to the WGBOOST_SEED environment variable.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import dataio, synthetic
from .boosting import (
    BoostConfig,
    InitConfig,
    fit,
    fit_with_early_stopping,
    load_model,
    make_classification_targets,
    make_regression_targets,
    save_model,
    task_config,
)
from .directions import DirectionKind
from .errors import ConfigError, DataError, NumericError
from .evaluate import (
    classification_accuracy,
    ood_score,
    point_predictions,
    point_predict_rmse,
    predicted_class,
    predictive_class_probs,
    predictive_nll_categorical,
    predictive_nll_normal,
)
from .kernel import KernelConfig
from .tree import TreeParams

METRIC_COLUMNS = [
    "dataset",
    "seed",
    "M",
    "NLL",
    "RMSE",
    "accuracy",
    "pr_auc",
    "mean_mmd",
    "wall_clock_s",
]

_BOOST_KEYS = {
    "n_particles",
    "max_iterations",
    "learning_rate",
    "direction",
    "kernel_scale",
    "max_depth",
    "min_samples_leaf",
    "min_samples_split",
    "subsample_fraction",
    "init_rate",
    "init_steps",
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3
    except NumericError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 4
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wgboost",
        description="Tree boosting that outputs a particle set per input.",
    )
    sub = parser.add_subparsers(dest="command")

    tr = sub.add_parser("train", help="fit a model from a CSV table")
    tr.add_argument("--config", help="JSON run config; flags override its fields")
    tr.add_argument("--data", help="training CSV with a header row")
    tr.add_argument("--task", choices=["regression", "classification"])
    tr.add_argument("--label-column")
    tr.add_argument("--feature-columns", help="comma-separated subset of columns")
    tr.add_argument("--out-model", help="model JSON path (default model.json)")
    tr.add_argument("--out-log", help="per-iteration training log CSV")
    tr.add_argument("--seed", type=int)
    tr.add_argument("--n-particles", type=int)
    tr.add_argument("--max-iterations", type=int)
    tr.add_argument("--learning-rate", type=float)
    tr.add_argument("--direction", choices=[k.value for k in DirectionKind])
    tr.add_argument("--kernel-scale", type=float)
    tr.add_argument("--max-depth", type=int)
    tr.add_argument("--min-samples-leaf", type=int)
    tr.add_argument("--min-samples-split", type=int)
    tr.add_argument("--subsample", type=float, dest="subsample_fraction")
    tr.add_argument("--init-rate", type=float)
    tr.add_argument("--init-steps", type=int)
    tr.add_argument("--early-stopping", action=argparse.BooleanOptionalAction, default=None)
    tr.add_argument("--val-fraction", type=float)
    tr.add_argument("--threads", type=int, help="worker cap for tree fitting")
    tr.set_defaults(func=_cmd_train)

    ev = sub.add_parser("evaluate", help="score a model on a labeled CSV")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--label-column", required=True)
    ev.add_argument("--out", required=True, help="metrics CSV")
    ev.add_argument("--per-row", help="optional per-row CSV (predictions, probabilities)")
    ev.set_defaults(func=_cmd_evaluate)

    pr = sub.add_parser("predict", help="emit per-row particle outputs")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--label-column", help="column to ignore, if the CSV has one")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=_cmd_predict)

    be = sub.add_parser("bench-directions", help="compare direction estimators on the sin benchmark")
    be.add_argument("--out", required=True)
    be.add_argument("--iterations", type=int, default=100)
    be.add_argument("--checkpoints", default="0,10,25,50,100", help="comma-separated iteration counts")
    be.add_argument("--train-points", type=int, default=200)
    be.add_argument("--eval-points", type=int, default=500)
    be.add_argument("--n-particles", type=int, default=10)
    be.add_argument("--max-depth", type=int, default=3)
    be.add_argument("--learning-rate", type=float, default=0.1)
    be.add_argument("--kernel-scale", type=float, default=0.1)
    be.add_argument("--mmd-scale", type=float, default=0.025)
    be.add_argument("--seed", type=int)
    be.set_defaults(func=_cmd_bench)

    ts = sub.add_parser("toy-sin", help="small sin-curve run with plot-ready output")
    ts.add_argument("--out", required=True)
    ts.add_argument("--learners", type=int, default=100)
    ts.add_argument("--grid-points", type=int, default=10)
    ts.add_argument("--n-particles", type=int, default=10)
    ts.add_argument("--max-depth", type=int, default=1)
    ts.add_argument("--learning-rate", type=float, default=0.1)
    ts.add_argument("--seed", type=int)
    ts.set_defaults(func=_cmd_toy_sin)

    return parser


def _env_seed() -> int | None:
    raw = os.environ.get("WGBOOST_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"WGBOOST_SEED must be an integer, got {raw!r}") from None


def _resolve_seed(flag_value, doc: dict) -> int:
    if flag_value is not None:
        return int(flag_value)
    if "seed" in doc:
        if not isinstance(doc["seed"], int):
            raise ConfigError(f"config seed must be an integer, got {doc['seed']!r}")
        return doc["seed"]
    env = _env_seed()
    return 0 if env is None else env


def _load_config_doc(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot open config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return doc


def _build_boost_config(task: str, boost_doc: dict, args, seed: int) -> BoostConfig:
    if not isinstance(boost_doc, dict):
        raise ConfigError("config field 'boost' must be an object")
    unknown = set(boost_doc) - _BOOST_KEYS
    if unknown:
        raise ConfigError(f"unknown boost config keys: {sorted(unknown)}")
    merged = dict(boost_doc)
    for key in _BOOST_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    base = task_config(task)
    try:
        return BoostConfig(
            n_particles=merged.get("n_particles", base.n_particles),
            max_iterations=merged.get("max_iterations", base.max_iterations),
            learning_rate=merged.get("learning_rate", base.learning_rate),
            direction=DirectionKind(merged.get("direction", base.direction)),
            kernel=KernelConfig(merged.get("kernel_scale", base.kernel.scale)),
            tree=TreeParams(
                max_depth=merged.get("max_depth", base.tree.max_depth),
                min_samples_leaf=merged.get("min_samples_leaf", base.tree.min_samples_leaf),
                min_samples_split=merged.get("min_samples_split", base.tree.min_samples_split),
            ),
            subsample_fraction=merged.get("subsample_fraction", base.subsample_fraction),
            init=InitConfig(
                rate=merged.get("init_rate", base.init.rate),
                steps=merged.get("init_steps", base.init.steps),
            ),
            seed=seed,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _setting(args, doc: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return doc.get(key, default)


def _cmd_train(args) -> None:
    doc = _load_config_doc(args.config)
    known = {
        "task", "data", "label_column", "feature_columns", "seed",
        "early_stopping", "val_fraction", "out_model", "out_log", "threads", "boost",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    task = _setting(args, doc, "task", None)
    data = _setting(args, doc, "data", None)
    label_column = _setting(args, doc, "label_column", None)
    if task not in ("regression", "classification"):
        raise ConfigError(f"task must be regression or classification, got {task!r}")
    if data is None:
        raise ConfigError("no training data given (--data or config 'data')")
    if label_column is None:
        raise ConfigError("no label column given (--label-column or config 'label_column')")
    feature_columns = _setting(args, doc, "feature_columns", None)
    if isinstance(feature_columns, str):
        feature_columns = [c.strip() for c in feature_columns.split(",") if c.strip()]
    seed = _resolve_seed(args.seed, doc)
    early = _setting(args, doc, "early_stopping", False)
    val_fraction = float(_setting(args, doc, "val_fraction", 0.2))
    threads = _setting(args, doc, "threads", None)
    threads = int(threads) if threads is not None else (os.cpu_count() or 1)
    out_model = _setting(args, doc, "out_model", "model.json")
    out_log = _setting(args, doc, "out_log", None)
    cfg = _build_boost_config(task, doc.get("boost", {}), args, seed)

    X, raw_labels, _ = dataio.read_table(data, label_column, feature_columns)
    curve = None
    if task == "regression":
        y = dataio.parse_regression_labels(raw_labels, data)
        targets, std = make_regression_targets(y)
        if early:
            model, curve = fit_with_early_stopping(
                X, targets, cfg, val_fraction, standardization=std, threads=threads
            )
        else:
            model = fit(X, targets, cfg, standardization=std, threads=threads)
    else:
        labels, values = dataio.encode_class_labels(raw_labels)
        targets = make_classification_targets(labels)
        if early:
            model, curve = fit_with_early_stopping(
                X, targets, cfg, val_fraction, label_values=values, threads=threads
            )
        else:
            model = fit(X, targets, cfg, label_values=values, threads=threads)

    save_model(model, out_model)
    if out_log is not None:
        rows = []
        if curve is not None:
            rows.append({"iteration": 0, "val_nll": curve[0]})
            for m in range(1, len(curve)):
                rows.append({"iteration": m, "val_nll": curve[m]})
        else:
            for m, proxy in enumerate(model.train_trace, start=1):
                rows.append({"iteration": m, "direction_sq_mean": proxy})
        dataio.write_csv(out_log, ["iteration", "direction_sq_mean", "val_nll"], rows, seed)
    chosen = f", kept {model.n_iterations} of {cfg.max_iterations} iterations" if curve else ""
    print(f"saved {task} model to {out_model} ({model.n_iterations} iterations{chosen})")


def _load_model_checked(path: str):
    try:
        return load_model(path)
    except OSError as err:
        raise DataError(f"cannot open model {path}: {err}") from err
    except (KeyError, ValueError, TypeError) as err:
        raise DataError(f"model {path} is malformed: {err}") from err


def _cmd_evaluate(args) -> None:
    model = _load_model_checked(args.model)
    X, raw_labels, _ = dataio.read_table(args.data, args.label_column)
    started = time.perf_counter()
    preds = model.predict(X)
    row = {c: "" for c in METRIC_COLUMNS}
    row["dataset"] = Path(args.data).stem
    row["seed"] = model.config.seed
    row["M"] = model.n_iterations
    per_rows = []
    per_header: list[str] = []
    if model.target_family == "normal":
        y = dataio.parse_regression_labels(raw_labels, args.data)
        std = model.standardization
        row["NLL"] = predictive_nll_normal(preds, y, std)
        row["RMSE"] = point_predict_rmse(preds, y, std)
        points = point_predictions(preds, std)
        per_header = ["prediction"]
        per_rows = [{"prediction": p} for p in points]
    elif model.target_family == "categorical":
        if model.label_values is None:
            raise DataError("classification model lacks a stored label mapping")
        y = dataio.apply_class_labels(raw_labels, model.label_values, args.data)
        k = model.num_classes
        row["accuracy"] = classification_accuracy(preds, y, k)
        row["NLL"] = predictive_nll_categorical(preds, y, k)
        probs = predictive_class_probs(preds, k)
        classes = predicted_class(preds, k)
        scores = ood_score(preds, k)
        per_header = ["predicted_label", *(f"prob_{v}" for v in model.label_values), "ood_score"]
        for i in range(X.shape[0]):
            r = {"predicted_label": model.label_values[classes[i] - 1], "ood_score": scores[i]}
            for j, v in enumerate(model.label_values):
                r[f"prob_{v}"] = probs[i, j]
            per_rows.append(r)
    else:
        raise DataError(f"cannot evaluate a model with target family {model.target_family!r}")
    row["wall_clock_s"] = time.perf_counter() - started
    dataio.write_csv(args.out, METRIC_COLUMNS, [row], model.config.seed)
    if args.per_row:
        dataio.write_csv(args.per_row, per_header, per_rows, model.config.seed)
    shown = {c: row[c] for c in ("NLL", "RMSE", "accuracy") if row[c] != ""}
    print(f"wrote metrics to {args.out}: " + ", ".join(f"{k}={v:.4f}" for k, v in shown.items()))


def _cmd_predict(args) -> None:
    model = _load_model_checked(args.model)
    X, _, _ = dataio.read_table(args.data, args.label_column)
    preds = model.predict(X)
    n = preds.shape[1]
    rows = []
    if model.target_family == "categorical":
        k = model.num_classes
        values = model.label_values or [str(j) for j in range(1, k + 1)]
        header = ["predicted_label", *(f"prob_{v}" for v in values), "ood_score"]
        probs = predictive_class_probs(preds, k)
        classes = predicted_class(preds, k)
        scores = ood_score(preds, k)
        for i in range(X.shape[0]):
            r = {"predicted_label": values[classes[i] - 1], "ood_score": scores[i]}
            for j, v in enumerate(values):
                r[f"prob_{v}"] = probs[i, j]
            rows.append(r)
    else:
        d = preds.shape[2]
        header = []
        if model.target_family == "normal":
            header.append("prediction")
        header += [f"particle_{i + 1}_{c}" for i in range(n) for c in range(d)]
        points = point_predictions(preds, model.standardization) if model.target_family == "normal" else None
        for i in range(X.shape[0]):
            r = {}
            if points is not None:
                r["prediction"] = points[i]
            for pi in range(n):
                for c in range(d):
                    r[f"particle_{pi + 1}_{c}"] = preds[i, pi, c]
            rows.append(r)
    dataio.write_csv(args.out, header, rows, model.config.seed)
    print(f"wrote {len(rows)} prediction rows to {args.out}")


def _cmd_bench(args) -> None:
    try:
        checkpoints = tuple(int(c) for c in args.checkpoints.split(","))
    except ValueError:
        raise ConfigError(f"bad checkpoint list {args.checkpoints!r}") from None
    seed = args.seed if args.seed is not None else (_env_seed() or 0)
    try:
        rows = synthetic.run_direction_bench(
            iterations=args.iterations,
            checkpoints=checkpoints,
            n_train=args.train_points,
            n_eval=args.eval_points,
            n_particles=args.n_particles,
            max_depth=args.max_depth,
            learning_rate=args.learning_rate,
            kernel_scale=args.kernel_scale,
            mmd_scale=args.mmd_scale,
            seed=seed,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    dataio.write_csv(args.out, ["direction", "weak_learners", "mean_mmd", "wall_clock_s"], rows, seed)
    print(f"wrote {len(rows)} benchmark rows to {args.out}")


def _cmd_toy_sin(args) -> None:
    seed = args.seed if args.seed is not None else (_env_seed() or 0)
    try:
        rows = synthetic.run_toy_sin(
            learners=args.learners,
            grid_points=args.grid_points,
            n_particles=args.n_particles,
            max_depth=args.max_depth,
            learning_rate=args.learning_rate,
            seed=seed,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    header = list(rows[0].keys())
    dataio.write_csv(args.out, header, rows, seed)
    print(f"wrote {len(rows)} grid rows to {args.out}")


if __name__ == "__main__":
    sys.exit(main())
