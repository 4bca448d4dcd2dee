"""Logistic regression, decision tree and random forest behind one artifact type."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, DataError
from ..hrv import FEATURE_NAMES
from ..signal_io import MODEL_KINDS, ModelArtifact
from .tree import grow_tree, tree_proba


@dataclass(frozen=True)
class LogRegConfig:
    C: float = 1.0
    max_iter: int = 100
    tol: float = 1e-4
    standardize: bool = False
    seed: int = 0

    def __post_init__(self):
        if not self.C > 0:
            raise ConfigError("C must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = None
    min_samples_split: int = 2
    seed: int = 0


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_features: int | None = None  # None -> floor(sqrt(d))
    bootstrap: bool = True
    min_samples_split: int = 2
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")


_CONFIGS = {"logreg": LogRegConfig, "dtree": TreeConfig, "rforest": ForestConfig}


@dataclass(frozen=True)
class ModelSpec:
    """Model kind plus hyperparameters, as read from a run config."""

    kind: str = "rforest"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unsupported model kind {self.kind!r}")

    def config(self, seed=None):
        params = dict(self.params)
        if seed is not None:
            params["seed"] = seed
        try:
            return _CONFIGS[self.kind](**params)
        except TypeError as exc:
            raise ConfigError(f"bad {self.kind} parameters: {exc}") from None


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise DataError("training features must be finite")
    if np.any((y != 0) & (y != 1)):
        raise DataError("labels must be 0 or 1")
    return X, y.astype(np.int64)


def _require_two_classes(y):
    if np.unique(y).size < 2:
        raise DataError("single-class training set")


def _feature_order(d):
    return list(FEATURE_NAMES) if d == len(FEATURE_NAMES) else [f"x{i}" for i in range(d)]


def _artifact(kind, params, d, meta):
    return ModelArtifact(kind, params, _feature_order(d), meta)


# ------------------------------------------------------------ logistic

def _logistic_objective(w, b, X, y, C):
    z = X @ w + b
    # log(1 + exp(z)) - y z, stable
    loss = np.sum(np.logaddexp(0.0, z) - y * z)
    return loss + 0.5 * np.dot(w, w) / C, z


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def train_logreg(X, y, config: LogRegConfig = LogRegConfig()):
    """L2-penalized logistic regression by gradient descent with backtracking.

    Objective ``sum(log-loss) + ||w||^2 / (2C)``; the intercept is not
    penalized. Stops when the largest gradient component drops below ``tol``
    or after ``max_iter`` iterations.
    """
    X, y = _check_xy(X, y)
    _require_two_classes(y)
    n, d = X.shape
    mean = np.zeros(d)
    scale = np.ones(d)
    if config.standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
    Z = (X - mean) / scale

    w = np.zeros(d)
    b = 0.0
    step = 1.0
    f, z = _logistic_objective(w, b, Z, y, config.C)
    n_iter = 0
    for n_iter in range(1, config.max_iter + 1):
        r = _sigmoid(z) - y
        gw = Z.T @ r + w / config.C
        gb = float(r.sum())
        gnorm2 = float(gw @ gw + gb * gb)
        if max(np.max(np.abs(gw), initial=0.0), abs(gb)) <= config.tol:
            break
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            f_new, z_new = _logistic_objective(w_new, b_new, Z, y, config.C)
            if f_new <= f - 0.5 * step * gnorm2 or step < 1e-16:
                break
            step *= 0.5
        w, b, f, z = w_new, b_new, f_new, z_new

    params = {
        "coef": w.tolist(),
        "intercept": float(b),
        "mean": mean.tolist(),
        "scale": scale.tolist(),
        "n_iter": n_iter,
    }
    meta = {"hyperparameters": asdict(config), "seed": config.seed}
    return _artifact("logreg", params, d, meta)


# ---------------------------------------------------------------- trees

def train_dtree(X, y, config: TreeConfig = TreeConfig()):
    """Single CART tree over all features. A pure training set gives one leaf."""
    X, y = _check_xy(X, y)
    if y.size == 0:
        raise DataError("empty training set")
    tree = grow_tree(X, y, max_depth=config.max_depth,
                     min_samples_split=config.min_samples_split)
    meta = {"hyperparameters": asdict(config), "seed": config.seed}
    return _artifact("dtree", {"tree": tree}, X.shape[1], meta)


def tree_seed(seed, i):
    """Per-tree seed sequence; independent of training order."""
    return np.random.SeedSequence([int(seed), int(i)])


def _grow_one(X, y, config, max_features, i):
    rng = np.random.default_rng(tree_seed(config.seed, i))
    n = X.shape[0]
    if config.bootstrap:
        weights = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
    else:
        weights = None
    return grow_tree(X, y, weights=weights, max_features=max_features,
                     max_depth=config.max_depth,
                     min_samples_split=config.min_samples_split, rng=rng)


def train_rf(X, y, config: ForestConfig = ForestConfig()):
    """Bagged CART trees with per-split feature subsampling."""
    X, y = _check_xy(X, y)
    _require_two_classes(y)
    d = X.shape[1]
    max_features = config.max_features or max(1, math.isqrt(d))
    trees = [_grow_one(X, y, config, max_features, i) for i in range(config.n_trees)]
    hyper = asdict(config)
    hyper["max_features"] = max_features
    meta = {"hyperparameters": hyper, "seed": config.seed}
    return _artifact("rforest", {"trees": trees}, d, meta)


def train(spec: ModelSpec, X, y, seed=None):
    cfg = spec.config(seed)
    return {"logreg": train_logreg, "dtree": train_dtree, "rforest": train_rf}[spec.kind](X, y, cfg)


# ----------------------------------------------------------- prediction

def predict_proba(artifact: ModelArtifact, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(artifact.feature_order):
        raise DataError(
            f"expected {len(artifact.feature_order)} feature columns, got "
            f"{X.shape[1] if X.ndim == 2 else X.ndim}"
        )
    p = artifact.parameters
    if artifact.model_kind == "logreg":
        Z = (X - np.asarray(p["mean"])) / np.asarray(p["scale"])
        return _sigmoid(Z @ np.asarray(p["coef"]) + p["intercept"])
    if artifact.model_kind == "dtree":
        return tree_proba(p["tree"], X)
    total = np.zeros(X.shape[0])
    for tree in p["trees"]:
        total += tree_proba(tree, X)
    return total / len(p["trees"])


def predict(artifact: ModelArtifact, X):
    """``(labels, scores)``; a score of exactly 0.5 maps to the clean class."""
    scores = predict_proba(artifact, X)
    return (scores > 0.5).astype(np.int64), scores
