"""Regression calibration: measurements in, moisture predictor out.

Assembles feature matrices from sweep logs, fits one of four regressor
families (linear, ridge, polynomial, random forest), scores them with
R^2 / MAE on a held-out split, and renders side-by-side comparison
tables. Linear-algebra solves go through numpy; the forest is grown here
so splits and tie-breaks are fully deterministic under a seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Sequence

import numpy as np

from .sweepproto import Measurement, PowerPlan, median_power

MODEL_FILE_FORMAT = "smol-model"
MODEL_FILE_VERSION = 1


class SingularSystemError(ArithmeticError):
    """A linear fit hit a rank-deficient design matrix."""


class FeatureMode(str, Enum):
    """Which inputs the regressor sees."""

    ALL_TX = "all_tx"        # features [rssi, tx_power], every packet
    MEDIAN_TX = "median_tx"  # feature [rssi], packets at the plan's median power


class ModelKind(str, Enum):
    LINEAR = "linear"
    RIDGE = "ridge"
    POLYNOMIAL = "polynomial"
    RANDOM_FOREST = "random_forest"


KIND_LABELS = {
    ModelKind.LINEAR: "Linear Regression",
    ModelKind.RIDGE: "Ridge Regression",
    ModelKind.POLYNOMIAL: "Polynomial",
    ModelKind.RANDOM_FOREST: "Random Forest",
}

MODE_LABELS = {
    FeatureMode.ALL_TX: "all TX powers",
    FeatureMode.MEDIAN_TX: "median TX power",
}


@dataclass(frozen=True)
class ModelSpec:
    """Hyperparameters for one regressor family.

    Only the fields relevant to ``kind`` matter; the rest ride along so a
    spec stays a plain value object. ``bootstrap=False`` lets a single
    fully-grown tree see every training row (useful for sanity checks).
    """

    kind: ModelKind
    poly_degree: int = 2
    ridge_lambda: float = 1.0
    n_trees: int = 100
    max_depth: int | None = 10
    min_leaf: int = 2
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind == ModelKind.POLYNOMIAL and self.poly_degree < 2:
            raise ValueError("polynomial degree must be >= 2")
        if self.kind == ModelKind.RIDGE and self.ridge_lambda < 0.0:
            raise ValueError("ridge penalty must be >= 0")
        if self.kind == ModelKind.RANDOM_FOREST:
            if self.n_trees < 1:
                raise ValueError("forest needs at least one tree")
            if self.max_depth is not None and self.max_depth < 1:
                raise ValueError("max depth must be >= 1 (or None for unbounded)")
            if self.min_leaf < 1:
                raise ValueError("min leaf size must be >= 1")


@dataclass
class Dataset:
    """Feature matrix + targets (VWC percent) under one feature mode."""

    features: np.ndarray
    targets: np.ndarray
    feature_mode: FeatureMode
    feature_names: tuple[str, ...]
    median_tx_power: int | None = None

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if len(self.features) != len(self.targets):
            raise ValueError("feature/target row counts differ")
        if self.features.shape[1] != len(self.feature_names):
            raise ValueError("feature name count does not match columns")

    def __len__(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class Evaluation:
    """Held-out metrics. r_squared is None when the test targets have
    zero variance (the statistic is undefined there); MAE always exists."""

    r_squared: float | None
    mae: float


@dataclass
class TrainedModel:
    """A fitted regressor plus everything needed to reuse it."""

    spec: ModelSpec
    feature_mode: FeatureMode
    feature_names: tuple[str, ...]
    params: dict
    median_tx_power: int | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict(self, features: Sequence[float]) -> float:
        """Point estimate (VWC percent) for one feature vector."""
        x = np.asarray(features, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.n_features:
            raise ValueError(
                f"model expects {self.n_features} feature(s), got shape {x.shape}"
            )
        return float(self.predict_many(x.reshape(1, -1))[0])

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"model expects (n, {self.n_features}) features, got {X.shape}"
            )
        kind = self.spec.kind
        if kind in (ModelKind.LINEAR, ModelKind.RIDGE):
            beta = np.asarray(self.params["beta"])
            return beta[0] + X @ beta[1:]
        if kind == ModelKind.POLYNOMIAL:
            beta = np.asarray(self.params["beta"])
            powers = [tuple(p) for p in self.params["powers"]]
            return polynomial_expand(X, powers) @ beta
        preds = np.array([self.per_tree_predictions(row) for row in X])
        return preds.mean(axis=1)

    def per_tree_predictions(self, features: Sequence[float]) -> np.ndarray:
        """Individual tree outputs for one row (forest models only)."""
        if self.spec.kind != ModelKind.RANDOM_FOREST:
            raise ValueError("per-tree outputs only exist for forest models")
        x = np.asarray(features, dtype=float)
        return np.array([_tree_predict(tree, x) for tree in self.params["trees"]])


# ---------------------------------------------------------------------------
# dataset assembly and splitting

def assemble(
    measurements: Sequence[Measurement],
    mode: FeatureMode,
    plan: PowerPlan | None = None,
) -> Dataset:
    """Build a training dataset from ground-truthed measurements.

    ALL_TX keeps every packet with features [rssi, tx_power]; MEDIAN_TX
    keeps only packets sent at the plan's median power, feature [rssi].
    When no plan is given the levels are inferred from the log itself.
    Targets are VWC percent.
    """
    if len(measurements) == 0:
        raise ValueError("no measurements to assemble")
    missing = sum(1 for m in measurements if m.vwc_truth is None)
    if missing:
        raise ValueError(
            f"{missing} measurement(s) lack ground truth; "
            "assembling a training set needs the vwc_truth column"
        )

    if mode == FeatureMode.ALL_TX:
        X = [[m.rssi, float(m.tx_power)] for m in measurements]
        y = [100.0 * m.vwc_truth for m in measurements]
        return Dataset(
            np.array(X), np.array(y), mode, ("rssi_dbm", "tx_power_dbm")
        )

    if plan is None:
        plan = PowerPlan(tuple(sorted({m.tx_power for m in measurements})))
    med = median_power(plan)
    kept = [m for m in measurements if m.tx_power == med]
    if not kept:
        raise ValueError(f"no measurements at the median power {med} dBm")
    X = [[m.rssi] for m in kept]
    y = [100.0 * m.vwc_truth for m in kept]
    return Dataset(
        np.array(X), np.array(y), mode, ("rssi_dbm",), median_tx_power=med
    )


def split(d: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded random partition: ceil(n*fraction) rows train, rest test."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train fraction must be strictly between 0 and 1")
    n = len(d)
    n_train = math.ceil(n * train_fraction)
    if n - n_train < 1 or n_train < 1:
        raise ValueError(f"{n} row(s) cannot leave both splits non-empty")
    perm = np.random.default_rng(seed).permutation(n)
    train_idx, test_idx = perm[:n_train], perm[n_train:]

    def take(idx: np.ndarray) -> Dataset:
        return Dataset(
            d.features[idx],
            d.targets[idx],
            d.feature_mode,
            d.feature_names,
            median_tx_power=d.median_tx_power,
        )

    return take(train_idx), take(test_idx)


# ---------------------------------------------------------------------------
# fitting

def polynomial_powers(n_features: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of all monomials with total degree <= degree,
    ordered by total degree then feature index; one feature and degree 2
    give [(0,), (1,), (2,)], i.e. the basis [1, x, x^2]."""
    powers: list[tuple[int, ...]] = []
    for total in range(degree + 1):
        for combo in combinations_with_replacement(range(n_features), total):
            exps = [0] * n_features
            for j in combo:
                exps[j] += 1
            powers.append(tuple(exps))
    return powers


def polynomial_expand(X: np.ndarray, powers: Sequence[tuple[int, ...]]) -> np.ndarray:
    cols = [np.prod(X ** np.array(p), axis=1) for p in powers]
    return np.column_stack(cols)


def _solve_least_squares(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise SingularSystemError(
            f"design matrix rank {rank} < {design.shape[1]} columns"
        )
    return beta


def _fit_linear(X: np.ndarray, y: np.ndarray) -> dict:
    design = np.column_stack([np.ones(len(y)), X])
    return {"beta": _solve_least_squares(design, y)}


def _fit_ridge(X: np.ndarray, y: np.ndarray, lam: float) -> dict:
    if lam == 0.0:
        return _fit_linear(X, y)
    n, d = X.shape
    # Augmented rows sqrt(lam)*I penalize the slope coefficients only;
    # the intercept column stays unpenalized.
    design = np.column_stack([np.ones(n), X])
    penalty = np.hstack([np.zeros((d, 1)), math.sqrt(lam) * np.eye(d)])
    return {
        "beta": _solve_least_squares(
            np.vstack([design, penalty]), np.concatenate([y, np.zeros(d)])
        )
    }


def _fit_polynomial(X: np.ndarray, y: np.ndarray, degree: int) -> dict:
    powers = polynomial_powers(X.shape[1], degree)
    design = polynomial_expand(X, powers)
    return {"beta": _solve_least_squares(design, y), "powers": powers}


def _best_split(X: np.ndarray, y: np.ndarray, min_leaf: int):
    """Greedy variance-reduction split; ties go to the lowest feature
    index, then the lowest threshold. Returns (feature, threshold) or None."""
    n = len(y)
    total_sse = float(np.sum(y * y) - np.sum(y) ** 2 / n)
    best_gain = 0.0
    best = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        left_n = np.arange(1, n)
        valid = (xs[1:] != xs[:-1]) & (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not valid.any():
            continue
        cy = np.cumsum(ys)[:-1]
        cyy = np.cumsum(ys * ys)[:-1]
        sse_left = cyy - cy * cy / left_n
        sse_right = (cyy[-1] + ys[-1] * ys[-1] - cyy) - (
            (cy[-1] + ys[-1] - cy) ** 2 / (n - left_n)
        )
        gains = np.where(valid, total_sse - sse_left - sse_right, -np.inf)
        k = int(np.argmax(gains))  # first max: lowest threshold wins ties
        if gains[k] > best_gain:
            thr = (xs[k] + xs[k + 1]) / 2.0
            if not thr < xs[k + 1]:  # adjacent floats: fall back to left value
                thr = xs[k]
            best_gain = float(gains[k])
            best = (j, float(thr))
    return best


def _grow_tree(
    X: np.ndarray, y: np.ndarray, max_depth: int | None, min_leaf: int, depth: int = 0
) -> dict:
    n = len(y)
    if (
        (max_depth is not None and depth >= max_depth)
        or n < 2 * min_leaf
        or np.all(y == y[0])
    ):
        return {"value": float(np.mean(y))}
    found = _best_split(X, y, min_leaf)
    if found is None:
        return {"value": float(np.mean(y))}
    feature, threshold = found
    mask = X[:, feature] <= threshold
    return {
        "feature": feature,
        "threshold": threshold,
        "left": _grow_tree(X[mask], y[mask], max_depth, min_leaf, depth + 1),
        "right": _grow_tree(X[~mask], y[~mask], max_depth, min_leaf, depth + 1),
    }


def _tree_predict(node: dict, x: np.ndarray) -> float:
    while "value" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["value"]


def _fit_forest(X: np.ndarray, y: np.ndarray, spec: ModelSpec) -> dict:
    rng = np.random.default_rng(spec.seed)
    n = len(y)
    trees = []
    for _ in range(spec.n_trees):
        idx = rng.integers(0, n, size=n) if spec.bootstrap else np.arange(n)
        trees.append(_grow_tree(X[idx], y[idx], spec.max_depth, spec.min_leaf))
    return {"trees": trees}


def fit(spec: ModelSpec, train: Dataset) -> TrainedModel:
    """Fit one regressor on the training rows.

    Linear and ridge solve least squares with an intercept (ridge adds an
    L2 penalty on the slopes only); polynomial expands to all monomials
    of total degree <= poly_degree first. The forest bootstraps seeded
    resamples and grows greedy variance-reduction trees. Rank-deficient
    linear solves raise SingularSystemError rather than regularizing
    silently.
    """
    if len(train) == 0:
        raise ValueError("cannot fit on an empty training set")
    X, y = train.features, train.targets
    if spec.kind == ModelKind.LINEAR:
        params = _fit_linear(X, y)
    elif spec.kind == ModelKind.RIDGE:
        params = _fit_ridge(X, y, spec.ridge_lambda)
    elif spec.kind == ModelKind.POLYNOMIAL:
        params = _fit_polynomial(X, y, spec.poly_degree)
    else:
        params = _fit_forest(X, y, spec)
    return TrainedModel(
        spec=spec,
        feature_mode=train.feature_mode,
        feature_names=train.feature_names,
        params=params,
        median_tx_power=train.median_tx_power,
        metadata={"n_train": len(train)},
    )


# ---------------------------------------------------------------------------
# evaluation

def mean_absolute_error(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    return float(np.mean(np.abs(y_true - y_pred)))


def r_squared(y_true: np.ndarray, y_pred: np.ndarray) -> float | None:
    """1 - SS_res/SS_tot against the mean of y_true; None when SS_tot is 0."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot


def evaluate(model: TrainedModel, test: Dataset) -> Evaluation:
    """Score a model on held-out rows."""
    if len(test) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    preds = model.predict_many(test.features)
    return Evaluation(
        r_squared=r_squared(test.targets, preds),
        mae=mean_absolute_error(test.targets, preds),
    )


# ---------------------------------------------------------------------------
# model persistence

def save_model(model: TrainedModel, path: str | Path) -> None:
    """Write a self-describing JSON model file; load_model inverts it."""
    params = dict(model.params)
    if "beta" in params:
        params["beta"] = [float(b) for b in params["beta"]]
    if "powers" in params:
        params["powers"] = [list(p) for p in params["powers"]]
    payload = {
        "format": MODEL_FILE_FORMAT,
        "version": MODEL_FILE_VERSION,
        "spec": {
            "kind": model.spec.kind.value,
            "poly_degree": model.spec.poly_degree,
            "ridge_lambda": model.spec.ridge_lambda,
            "n_trees": model.spec.n_trees,
            "max_depth": model.spec.max_depth,
            "min_leaf": model.spec.min_leaf,
            "bootstrap": model.spec.bootstrap,
            "seed": model.spec.seed,
        },
        "feature_mode": model.feature_mode.value,
        "feature_names": list(model.feature_names),
        "median_tx_power": model.median_tx_power,
        "params": params,
        "metadata": model.metadata,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> TrainedModel:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != MODEL_FILE_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FILE_FORMAT} file")
    if payload.get("version") != MODEL_FILE_VERSION:
        raise ValueError(f"{path}: unsupported model file version")
    spec_d = payload["spec"]
    spec = ModelSpec(
        kind=ModelKind(spec_d["kind"]),
        poly_degree=spec_d["poly_degree"],
        ridge_lambda=spec_d["ridge_lambda"],
        n_trees=spec_d["n_trees"],
        max_depth=spec_d["max_depth"],
        min_leaf=spec_d["min_leaf"],
        bootstrap=spec_d["bootstrap"],
        seed=spec_d["seed"],
    )
    params = payload["params"]
    if "beta" in params:
        params["beta"] = np.array(params["beta"], dtype=float)
    if "powers" in params:
        params["powers"] = [tuple(p) for p in params["powers"]]
    return TrainedModel(
        spec=spec,
        feature_mode=FeatureMode(payload["feature_mode"]),
        feature_names=tuple(payload["feature_names"]),
        params=params,
        median_tx_power=payload["median_tx_power"],
        metadata=payload.get("metadata", {}),
    )


# ---------------------------------------------------------------------------
# side-by-side comparison

# The headline comparison: three model families x two feature modes.
# Ridge stays available through fit() but is not part of this preset.
DEFAULT_COMPARISON_SPECS: tuple[ModelSpec, ...] = (
    ModelSpec(ModelKind.RANDOM_FOREST),
    ModelSpec(ModelKind.POLYNOMIAL, poly_degree=2),
    ModelSpec(ModelKind.LINEAR),
)


@dataclass
class CompareRow:
    """One line of the comparison table."""

    kind: ModelKind
    mode: FeatureMode
    r_squared: float | None = None
    mae: float | None = None
    error: str | None = None
    best: bool = False

    @property
    def label(self) -> str:
        return f"{KIND_LABELS[self.kind]} w/ {MODE_LABELS[self.mode]}"


def rank_rows(rows: list[CompareRow]) -> list[CompareRow]:
    """Sort by R^2 descending (undefined/error rows sink) and flag the winner."""
    def key(row: CompareRow) -> float:
        return -row.r_squared if row.r_squared is not None else math.inf

    ordered = sorted(rows, key=key)
    for row in ordered:
        row.best = False
    if ordered and ordered[0].r_squared is not None:
        ordered[0].best = True
    return ordered


def compare(
    specs: Sequence[ModelSpec],
    measurements: Sequence[Measurement],
    modes: Sequence[FeatureMode],
    train_fraction: float = 0.8,
    split_seed: int = 0,
    plan: PowerPlan | None = None,
) -> list[CompareRow]:
    """Assemble/split/fit/evaluate every (spec, mode) pair.

    A failing combination becomes an error row instead of aborting the
    whole comparison. Rows come back ranked with the winner flagged.
    """
    rows: list[CompareRow] = []
    for mode in modes:
        try:
            dataset = assemble(measurements, mode, plan=plan)
            train, test = split(dataset, train_fraction, split_seed)
        except (ValueError, SingularSystemError) as err:
            rows.extend(
                CompareRow(spec.kind, mode, error=str(err)) for spec in specs
            )
            continue
        for spec in specs:
            try:
                ev = evaluate(fit(spec, train), test)
                rows.append(CompareRow(spec.kind, mode, ev.r_squared, ev.mae))
            except (ValueError, SingularSystemError) as err:
                rows.append(CompareRow(spec.kind, mode, error=str(err)))
    return rank_rows(rows)


def render_table(rows: Sequence[CompareRow]) -> str:
    """Fixed-width text table; the best row is starred."""
    header = f"{'':2}{'Model':<40}{'R^2':>8}{'MAE':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        star = "* " if row.best else "  "
        if row.error is not None:
            lines.append(f"{star}{row.label:<40}{'error':>8}  {row.error}")
            continue
        r2 = "undef" if row.r_squared is None else f"{row.r_squared:.2f}"
        lines.append(f"{star}{row.label:<40}{r2:>8}{row.mae:>8.2f}")
    return "\n".join(lines)
