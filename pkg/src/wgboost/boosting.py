"""The boosting loop: N parallel tree ensembles emitting particles.

A model maps an input x to N particles in R^d.  Fitting keeps a cached
particle matrix F of shape (D, N, d) over the training rows; each iteration
computes the chosen update direction for every row, fits one tree per
particle index to the direction rows, and advances the whole cache by
learning_rate times the tree predictions.  Prediction replays the same sums,
so staged predictions agree with the cache bit for bit.

All randomness (initializer draw, Langevin noise, row subsampling, the
early-stopping validation split) comes from four independent streams derived
from the single config seed, which makes repeat runs byte-identical.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .directions import DirectionKind, compute_direction
from .errors import DataError, NumericError
from .evaluate import Standardization, predictive_nll_categorical, predictive_nll_normal
from .kernel import KernelConfig
from .targets import CategoricalTarget, EvidentialTarget, NormalLocationScaleTarget
from .tree import RegressionTree, TreeParams, fit_tree

FORMAT_VERSION = 1


@dataclass(frozen=True)
class InitConfig:
    """Initializer: averaged particle updates before any tree is fitted."""

    rate: float = 0.01
    steps: int = 5000

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError("init rate must be positive")
        if self.steps < 0:
            raise ValueError("init steps must be >= 0")


@dataclass(frozen=True)
class BoostConfig:
    """Everything a fit depends on besides the data.

    The learning rate default suits regression; classification runs are
    usually trained with 0.4 (see :func:`task_config`).
    """

    n_particles: int = 10
    max_iterations: int = 500
    learning_rate: float = 0.1
    direction: DirectionKind = DirectionKind.DIAG_NEWTON
    kernel: KernelConfig = KernelConfig()
    tree: TreeParams = TreeParams()
    subsample_fraction: float = 1.0
    init: InitConfig = InitConfig()
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", DirectionKind(self.direction))
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ValueError("subsample_fraction must lie in (0, 1]")


def task_config(task: str, **overrides) -> BoostConfig:
    """Benchmark defaults per task: lr 0.1 (regression) or 0.4 (classification)."""
    if task == "regression":
        base = {"learning_rate": 0.1, "max_iterations": 4000}
    elif task == "classification":
        base = {"learning_rate": 0.4, "max_iterations": 4000}
    else:
        raise ValueError(f"unknown task {task!r}")
    base.update(overrides)
    return BoostConfig(**base)


@dataclass
class WGBoostModel:
    config: BoostConfig
    target_family: str
    init_particles: np.ndarray  # (N, d)
    ensembles: list[list[RegressionTree]]
    n_features: int
    num_classes: int | None = None
    standardization: Standardization | None = None
    label_values: list | None = None
    train_trace: list[float] = field(default_factory=list, repr=False, compare=False)

    @property
    def n_iterations(self) -> int:
        return len(self.ensembles[0]) if self.ensembles else 0

    def predict(self, X: np.ndarray, num_trees: int | None = None) -> np.ndarray:
        """Particle outputs for rows of X: (T, p) -> (T, N, d), (p,) -> (N, d).

        ``num_trees`` truncates the ensembles, reproducing the staged values
        seen during fitting exactly.
        """
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        Xb = X[None, :] if single else X
        if Xb.ndim != 2 or Xb.shape[1] != self.n_features:
            raise ValueError(f"expected rows with {self.n_features} features, got shape {X.shape}")
        n, d = self.init_particles.shape
        out = np.broadcast_to(self.init_particles, (Xb.shape[0], n, d)).copy()
        stop = self.n_iterations if num_trees is None else num_trees
        lr = self.config.learning_rate
        for i, trees in enumerate(self.ensembles):
            for tree in trees[:stop]:
                out[:, i, :] += lr * tree.predict(Xb)
        return out[0] if single else out


def _streams(seed: int) -> tuple[np.random.Generator, ...]:
    """Independent generators for init draw, Langevin noise, subsampling, split."""
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(c) for c in children)


def init_particles(targets: EvidentialTarget, cfg: BoostConfig) -> np.ndarray:
    """Run the initializer from the config seed alone (no trees involved)."""
    rng_draw, rng_noise, _, _ = _streams(cfg.seed)
    return _run_init(targets, cfg, rng_draw, rng_noise)


def _run_init(
    targets: EvidentialTarget,
    cfg: BoostConfig,
    rng_draw: np.random.Generator,
    rng_noise: np.random.Generator,
) -> np.ndarray:
    """Draw N x d standard normals, then ascend the averaged direction.

    The particle set is shared by all D targets; each step moves it by
    init.rate times the direction averaged over the targets.  The Langevin
    kind uses init.rate as its rate here.
    """
    theta = rng_draw.standard_normal((cfg.n_particles, targets.dim))
    for step in range(cfg.init.steps):
        g = compute_direction(
            cfg.direction, theta, targets, cfg.kernel, rate=cfg.init.rate, rng=rng_noise
        )
        if g.ndim == 3:
            g = g.mean(axis=0)
        theta = theta + cfg.init.rate * g
        if not np.all(np.isfinite(theta)):
            raise NumericError(f"initializer drifted to non-finite values at step {step}")
    return theta


def _check_training_data(X: np.ndarray, targets: EvidentialTarget) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"features must be a 2-d array, got shape {X.shape}")
    if X.shape[0] == 0:
        raise DataError("cannot fit on an empty dataset")
    if not np.all(np.isfinite(X)):
        raise DataError("features contain non-finite values")
    if targets.n_data != X.shape[0]:
        raise DataError(f"{X.shape[0]} feature rows but {targets.n_data} targets")
    return X


def fit(
    X: np.ndarray,
    targets: EvidentialTarget,
    cfg: BoostConfig,
    *,
    init: np.ndarray | None = None,
    standardization: Standardization | None = None,
    label_values: list | None = None,
    threads: int = 1,
) -> WGBoostModel:
    """Fit the full model: initializer plus max_iterations boosting rounds.

    ``init`` overrides the initializer with an explicit (N, d) particle set.
    ``standardization`` and ``label_values`` are carried into the model for
    prediction-time convenience; they do not affect fitting.
    """
    X = _check_training_data(X, targets)
    rng_draw, rng_noise, rng_rows, _ = _streams(cfg.seed)
    if init is None:
        init = _run_init(targets, cfg, rng_draw, rng_noise)
    else:
        init = np.asarray(init, dtype=float)
        if init.shape != (cfg.n_particles, targets.dim):
            raise DataError(
                f"init particles have shape {init.shape}, expected {(cfg.n_particles, targets.dim)}"
            )
    ensembles, trace = _boost_loop(X, targets, cfg, init, rng_noise, rng_rows, threads)
    return WGBoostModel(
        config=cfg,
        target_family=targets.family,
        init_particles=init,
        ensembles=ensembles,
        n_features=X.shape[1],
        num_classes=getattr(targets, "k", None),
        standardization=standardization,
        label_values=label_values,
        train_trace=trace,
    )


def _boost_loop(
    X: np.ndarray,
    targets: EvidentialTarget,
    cfg: BoostConfig,
    init: np.ndarray,
    rng_noise: np.random.Generator,
    rng_rows: np.random.Generator,
    threads: int,
    on_iteration=None,
) -> tuple[list[list[RegressionTree]], list[float]]:
    n_data = X.shape[0]
    n, d = init.shape
    F = np.broadcast_to(init, (n_data, n, d)).copy()
    ensembles: list[list[RegressionTree]] = [[] for _ in range(n)]
    trace: list[float] = []
    n_sub = math.ceil(cfg.subsample_fraction * n_data)
    pool = ThreadPoolExecutor(max_workers=min(threads, n)) if threads > 1 else None
    try:
        for m in range(cfg.max_iterations):
            if n_sub < n_data:
                rows = np.sort(rng_rows.choice(n_data, size=n_sub, replace=False))
                X_it, t_it, theta = X[rows], targets.take(rows), F[rows]
            else:
                X_it, t_it, theta = X, targets, F
            try:
                g = compute_direction(
                    cfg.direction, theta, t_it, cfg.kernel, rate=cfg.learning_rate, rng=rng_noise
                )
            except NumericError as err:
                raise NumericError(f"iteration {m}: {err}") from err
            if not np.all(np.isfinite(g)):
                bad = int(np.nonzero(~np.isfinite(g).all(axis=(1, 2)))[0][0])
                raise NumericError(f"iteration {m}: non-finite direction for datum {bad}")
            if pool is not None:
                trees = list(pool.map(lambda i: fit_tree(X_it, g[:, i, :], cfg.tree), range(n)))
            else:
                trees = [fit_tree(X_it, g[:, i, :], cfg.tree) for i in range(n)]
            for i, tree in enumerate(trees):
                F[:, i, :] += cfg.learning_rate * tree.predict(X)
                ensembles[i].append(tree)
            trace.append(float(np.mean(g * g)))
            if on_iteration is not None:
                on_iteration(trees)
    finally:
        if pool is not None:
            pool.shutdown()
    return ensembles, trace


def fit_with_early_stopping(
    X: np.ndarray,
    targets: EvidentialTarget,
    cfg: BoostConfig,
    val_fraction: float = 0.2,
    *,
    standardization: Standardization | None = None,
    label_values: list | None = None,
    threads: int = 1,
) -> tuple[WGBoostModel, list[float]]:
    """Pick the iteration count on a held-out split, then refit from scratch.

    A seeded split holds out ``val_fraction`` of the rows.  A search fit on
    the rest records the validation NLL after every iteration (index 0 is the
    bare initializer); the refit on all rows uses the argmin, ties resolved
    toward fewer trees.  Returns the refit model and the recorded curve.
    """
    X = _check_training_data(X, targets)
    if targets.family not in ("normal", "categorical"):
        raise ValueError(f"early stopping has no NLL metric for family {targets.family!r}")
    n_data = X.shape[0]
    n_val = int(round(val_fraction * n_data))
    if n_val < 1 or n_val >= n_data:
        raise DataError(
            f"validation split of {n_val} rows out of {n_data} leaves nothing to fit or score"
        )
    rng_draw, rng_noise, rng_rows, rng_split = _streams(cfg.seed)
    perm = rng_split.permutation(n_data)
    val_idx = np.sort(perm[:n_val])
    fit_idx = np.sort(perm[n_val:])
    t_fit = targets.take(fit_idx)
    t_val = targets.take(val_idx)
    X_val = X[val_idx]

    init = _run_init(t_fit, cfg, rng_draw, rng_noise)
    F_val = np.broadcast_to(init, (n_val,) + init.shape).copy()
    if targets.family == "normal":
        metric = lambda: predictive_nll_normal(F_val, t_val.y, Standardization())
    else:
        metric = lambda: predictive_nll_categorical(F_val, t_val.y, t_val.k)
    curve = [metric()]

    def track(trees: list[RegressionTree]) -> None:
        for i, tree in enumerate(trees):
            F_val[:, i, :] += cfg.learning_rate * tree.predict(X_val)
        curve.append(metric())

    _boost_loop(X[fit_idx], t_fit, cfg, init, rng_noise, rng_rows, threads, on_iteration=track)
    best = int(np.argmin(curve))
    final = fit(
        X,
        targets,
        replace(cfg, max_iterations=best),
        standardization=standardization,
        label_values=label_values,
        threads=threads,
    )
    return final, curve


def _config_to_dict(cfg: BoostConfig) -> dict:
    return {
        "n_particles": cfg.n_particles,
        "max_iterations": cfg.max_iterations,
        "learning_rate": cfg.learning_rate,
        "direction": cfg.direction.value,
        "kernel_scale": cfg.kernel.scale,
        "tree": {
            "max_depth": cfg.tree.max_depth,
            "min_samples_leaf": cfg.tree.min_samples_leaf,
            "min_samples_split": cfg.tree.min_samples_split,
        },
        "subsample_fraction": cfg.subsample_fraction,
        "init": {"rate": cfg.init.rate, "steps": cfg.init.steps},
        "seed": cfg.seed,
    }


def _config_from_dict(doc: dict) -> BoostConfig:
    return BoostConfig(
        n_particles=doc["n_particles"],
        max_iterations=doc["max_iterations"],
        learning_rate=doc["learning_rate"],
        direction=DirectionKind(doc["direction"]),
        kernel=KernelConfig(doc["kernel_scale"]),
        tree=TreeParams(**doc["tree"]),
        subsample_fraction=doc["subsample_fraction"],
        init=InitConfig(**doc["init"]),
        seed=doc["seed"],
    )


def save_model(model: WGBoostModel, path: str | os.PathLike) -> None:
    """Serialize to JSON, writing a temp file first so failures leave no stub."""
    doc = {
        "format_version": FORMAT_VERSION,
        "target_family": model.target_family,
        "k": model.num_classes,
        "y_mean": None if model.standardization is None else model.standardization.y_mean,
        "y_std": None if model.standardization is None else model.standardization.y_std,
        "label_values": model.label_values,
        "n_features": model.n_features,
        "config": _config_to_dict(model.config),
        "init_particles": model.init_particles.tolist(),
        "ensembles": [[tree.to_dict() for tree in trees] for trees in model.ensembles],
    }
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: str | os.PathLike) -> WGBoostModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {doc.get('format_version')!r}")
    std = None
    if doc["y_mean"] is not None:
        std = Standardization(doc["y_mean"], doc["y_std"])
    return WGBoostModel(
        config=_config_from_dict(doc["config"]),
        target_family=doc["target_family"],
        init_particles=np.asarray(doc["init_particles"], dtype=float),
        ensembles=[[RegressionTree.from_dict(t) for t in trees] for trees in doc["ensembles"]],
        n_features=doc["n_features"],
        num_classes=doc["k"],
        standardization=std,
        label_values=doc["label_values"],
    )


def make_regression_targets(y: np.ndarray) -> tuple[NormalLocationScaleTarget, Standardization]:
    """Standardize raw responses and wrap them as location-scale targets."""
    std = Standardization.from_responses(y)
    return NormalLocationScaleTarget(std.standardize(y)), std


def make_classification_targets(labels, k: int | None = None) -> CategoricalTarget:
    """Wrap integer labels 1..k as categorical targets (k inferred if omitted)."""
    labels = np.asarray(labels)
    if k is None:
        k = int(labels.max())
    return CategoricalTarget(labels, k)


__all__ = [
    "BoostConfig",
    "InitConfig",
    "WGBoostModel",
    "fit",
    "fit_with_early_stopping",
    "init_particles",
    "load_model",
    "make_classification_targets",
    "make_regression_targets",
    "save_model",
    "task_config",
]
