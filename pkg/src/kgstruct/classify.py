"""Binary classifiers and stratified cross-validation for the negation probe.

Both classifiers are self-contained: logistic regression fit by full-batch
gradient descent with an L2 penalty, and a random forest of axis-aligned
Gini trees with bootstrap aggregation and per-split feature subsampling.
Both are deterministic for a fixed seed.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

CLASSIFIER_KINDS = ("linear", "forest")


def _check_binary(labels: np.ndarray) -> None:
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) < 2:
        raise DataError("training data contains a single class")
    if not set(classes.tolist()) <= {0, 1}:
        raise DataError(f"expected 0/1 labels, got classes {classes.tolist()}")
    if counts.min() < 2:
        raise DataError("need at least 2 examples per class")


@dataclass(frozen=True)
class LogisticConfig:
    learning_rate: float = 0.5
    iterations: int = 500
    l2: float = 1e-3


class LogisticRegressionClassifier:
    """Logistic regression with L2-penalized full-batch gradient descent.

    Weights start at zero, so the fit is deterministic without any seed.
    The intercept is not penalized.
    """

    def __init__(self, config: LogisticConfig | None = None):
        self.config = config or LogisticConfig()
        self.weights_: np.ndarray | None = None
        self.bias_: float = 0.0

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "LogisticRegressionClassifier":
        x = np.asarray(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64)
        _check_binary(y)
        n, d = x.shape
        w = np.zeros(d)
        b = 0.0
        lr = self.config.learning_rate
        lam = self.config.l2
        for _ in range(self.config.iterations):
            z = x @ w + b
            p = 1.0 / (1.0 + np.exp(-z))
            err = p - y
            w -= lr * (x.T @ err / n + lam * w)
            b -= lr * float(err.mean())
        self.weights_ = w
        self.bias_ = b
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        if self.weights_ is None:
            raise DataError("classifier is not fitted")
        z = np.asarray(features, dtype=np.float64) @ self.weights_ + self.bias_
        p1 = 1.0 / (1.0 + np.exp(-z))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.predict_proba(features)[:, 1] >= 0.5).astype(np.int64)


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 16
    min_samples_split: int = 2
    max_features: str | int = "sqrt"  # "sqrt", "all", or a fixed count
    bootstrap: bool = True
    seed: int = 0


class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "prediction")

    def __init__(self):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.prediction = -1


def _gini_best_split(
    x: np.ndarray, y: np.ndarray, features: np.ndarray
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity) over candidate midpoints.

    Thresholds sit halfway between consecutive distinct sorted values; the
    split sends rows with value <= threshold left. Returns None when no
    candidate feature admits a split.
    """
    n = len(y)
    best: tuple[int, float, float] | None = None
    for feat in features:
        col = x[:, feat]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        sorted_y = y[order]
        distinct = np.flatnonzero(sorted_col[1:] > sorted_col[:-1])
        if len(distinct) == 0:
            continue
        # cumulative positives up to each boundary -> vectorized Gini scan
        left_n = distinct + 1.0
        right_n = n - left_n
        cum_pos = np.cumsum(sorted_y)[distinct].astype(np.float64)
        total_pos = float(y.sum())
        p_left = cum_pos / left_n
        p_right = (total_pos - cum_pos) / right_n
        gini = (
            left_n * (2.0 * p_left * (1.0 - p_left))
            + right_n * (2.0 * p_right * (1.0 - p_right))
        ) / n
        at = int(np.argmin(gini))
        score = float(gini[at])
        if best is None or score < best[2]:
            threshold = 0.5 * (sorted_col[distinct[at]] + sorted_col[distinct[at] + 1])
            best = (int(feat), float(threshold), score)
    return best


def _build_tree(
    x: np.ndarray,
    y: np.ndarray,
    depth: int,
    config: ForestConfig,
    n_features_per_split: int,
    rng: np.random.Generator,
) -> _TreeNode:
    node = _TreeNode()
    pos = int(y.sum())
    if (
        pos == 0
        or pos == len(y)
        or depth >= config.max_depth
        or len(y) < config.min_samples_split
    ):
        node.prediction = int(pos * 2 > len(y))  # majority; ties go to class 0
        return node
    d = x.shape[1]
    if n_features_per_split >= d:
        features = np.arange(d)
    else:
        features = np.sort(rng.choice(d, size=n_features_per_split, replace=False))
    best = _gini_best_split(x, y, features)
    if best is None:
        node.prediction = int(pos * 2 > len(y))
        return node
    node.feature, node.threshold, _ = best
    mask = x[:, node.feature] <= node.threshold
    node.left = _build_tree(x[mask], y[mask], depth + 1, config, n_features_per_split, rng)
    node.right = _build_tree(x[~mask], y[~mask], depth + 1, config, n_features_per_split, rng)
    return node


def _tree_predict(node: _TreeNode, x: np.ndarray, out: np.ndarray, rows: np.ndarray) -> None:
    if node.prediction >= 0:
        out[rows] = node.prediction
        return
    mask = x[rows, node.feature] <= node.threshold
    _tree_predict(node.left, x, out, rows[mask])
    _tree_predict(node.right, x, out, rows[~mask])


class RandomForestClassifier:
    """Bootstrap-aggregated Gini decision trees with majority voting."""

    def __init__(self, config: ForestConfig | None = None):
        self.config = config or ForestConfig()
        self.trees_: list[_TreeNode] = []

    def _features_per_split(self, d: int) -> int:
        mf = self.config.max_features
        if mf == "sqrt":
            return max(1, int(np.sqrt(d)))
        if mf == "all":
            return d
        count = int(mf)
        if count < 1:
            raise ConfigError(f"max_features must be >= 1, got {mf!r}")
        return min(count, d)

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "RandomForestClassifier":
        x = np.asarray(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.int64)
        _check_binary(y)
        n, d = x.shape
        per_split = self._features_per_split(d)
        seeds = np.random.SeedSequence(self.config.seed).spawn(self.config.n_trees)
        self.trees_ = []
        for seq in seeds:
            rng = np.random.default_rng(seq)
            if self.config.bootstrap:
                rows = rng.integers(0, n, size=n)
                xb, yb = x[rows], y[rows]
            else:
                xb, yb = x, y
            self.trees_.append(_build_tree(xb, yb, 0, self.config, per_split, rng))
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        if not self.trees_:
            raise DataError("classifier is not fitted")
        x = np.asarray(features, dtype=np.float64)
        votes = np.zeros(len(x))
        scratch = np.empty(len(x), dtype=np.int64)
        rows = np.arange(len(x))
        for tree in self.trees_:
            _tree_predict(tree, x, scratch, rows)
            votes += scratch
        p1 = votes / len(self.trees_)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.predict_proba(features)[:, 1] > 0.5).astype(np.int64)


def train_linear_classifier(
    features: np.ndarray, labels: np.ndarray, config: LogisticConfig | None = None
) -> LogisticRegressionClassifier:
    return LogisticRegressionClassifier(config).fit(features, labels)


def train_forest_classifier(
    features: np.ndarray, labels: np.ndarray, config: ForestConfig | None = None
) -> RandomForestClassifier:
    return RandomForestClassifier(config).fit(features, labels)


# -- cross-validation ---------------------------------------------------------


@dataclass(frozen=True)
class CvReport:
    """Held-out accuracies of a stratified k-fold run."""

    folds: int
    accuracies: tuple[float, ...]
    mean_accuracy: float
    baseline_accuracy: float  # majority-class frequency
    classifier: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def to_json_dict(self) -> dict:
        return {
            "folds": self.folds,
            "accuracies": list(self.accuracies),
            "mean_accuracy": self.mean_accuracy,
            "baseline_accuracy": self.baseline_accuracy,
            "classifier": self.classifier,
            "hyperparams": self.hyperparams,
            "seed": self.seed,
        }


def stratified_folds(
    labels: np.ndarray, folds: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Shuffled per-class round-robin assignment into ``folds`` buckets.

    A single fold pointer runs across classes, so fold sizes differ by at
    most one overall and per-class counts differ by at most one per fold.
    """
    labels = np.asarray(labels)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    pointer = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        for i in idx:
            buckets[pointer % folds].append(int(i))
            pointer += 1
    return [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]


def _make_classifier(kind: str, seed: int, config=None):
    if kind == "linear":
        return LogisticRegressionClassifier(config)
    if kind == "forest":
        cfg = config or ForestConfig()
        return RandomForestClassifier(
            ForestConfig(**{**asdict(cfg), "seed": seed})
        )
    raise ConfigError(f"unknown classifier kind: {kind!r}")


def cross_validate(
    features: np.ndarray,
    labels: np.ndarray,
    kind: str,
    folds: int = 10,
    seed: int = 0,
    config=None,
) -> CvReport:
    """Stratified k-fold accuracy of one classifier kind.

    Each fold is held out once; the classifier is refit on the rest with a
    fold-specific child seed, keeping the whole run deterministic.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if folds < 2:
        raise ConfigError(f"folds must be >= 2, got {folds}")
    if len(y) < folds:
        raise DataError(f"dataset of {len(y)} rows cannot fill {folds} folds")
    _check_binary(y)
    rng = np.random.default_rng(seed)
    fold_indices = stratified_folds(y, folds, rng)
    accuracies = []
    for i, held_out in enumerate(fold_indices):
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[held_out] = False
        clf = _make_classifier(kind, seed=seed * 1000 + i, config=config)
        clf.fit(x[train_mask], y[train_mask])
        predicted = clf.predict(x[held_out])
        accuracies.append(float((predicted == y[held_out]).mean()))
    counts = np.bincount(y)
    used = config or (LogisticConfig() if kind == "linear" else ForestConfig())
    return CvReport(
        folds=folds,
        accuracies=tuple(accuracies),
        mean_accuracy=float(np.mean(accuracies)),
        baseline_accuracy=float(counts.max() / len(y)),
        classifier=kind,
        hyperparams=asdict(used),
        seed=seed,
    )
