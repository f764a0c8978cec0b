"""Least-squares gradient boosting over depth-limited regression trees."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from chargeplace.errors import DataError


@dataclass
class GbrtHyperparams:
    # Tuned values for the winning regressor; depth 14.444 floored to 14.
    learning_rate: float = 0.038
    n_estimators: int = 6873
    max_features: float = 0.894
    max_depth: int = 14
    min_samples_split: int = 30
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be nonnegative")
        if not 0 < self.max_features <= 1:
            raise ValueError("max_features must lie in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise ValueError("min_samples_split >= 2 and min_samples_leaf >= 1 required")


@dataclass
class RegressionTree:
    """Flat array tree.  ``feature[i] == -1`` marks node ``i`` as a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def depth(self) -> int:
        depths = np.zeros(len(self.feature), dtype=int)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            go_left = X[rows[active], feat[active]] <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=float),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["value"], dtype=float),
        )


def _best_split(X, r, feats, min_leaf):
    """Best (gain, feature, threshold, left_mask) over candidate columns, or None.

    Gain is the drop in residual sum of squares.  Ties go to the lowest
    candidate column, then the lowest threshold.
    """
    n = r.shape[0]
    if n < 2 * min_leaf:
        return None
    xs = X[:, feats]
    order = np.argsort(xs, axis=0, kind="stable")
    xv = np.take_along_axis(xs, order, axis=0)
    centered = r - r.mean()
    ys = centered[order]
    csum = np.cumsum(ys, axis=0)
    total = csum[-1]
    # split after sorted position i puts i+1 rows on the left
    pos = np.arange(min_leaf - 1, n - min_leaf)
    if pos.size == 0:
        return None
    n_left = (pos + 1).astype(float)[:, None]
    n_right = n - n_left
    s_left = csum[pos]
    s_right = total - s_left
    gain = s_left**2 / n_left + s_right**2 / n_right - total**2 / n
    valid = xv[pos] < xv[pos + 1]
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain.T.ravel()))
    j, p = divmod(flat, pos.size)
    i = pos[p]
    lo, hi = xv[i, j], xv[i + 1, j]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    f = int(feats[j])
    return max(float(gain[p, j]), 0.0), f, thr, X[:, f] <= thr


def fit_tree(X, residuals, hp: GbrtHyperparams, rng: np.random.Generator, importances: np.ndarray) -> RegressionTree:
    n_features = X.shape[1]
    k = min(n_features, max(1, math.ceil(hp.max_features * n_features)))

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(residuals[idx].mean()))
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        r = residuals[idx]
        if depth >= hp.max_depth or idx.size < hp.min_samples_split or r.max() == r.min():
            continue
        if k == n_features:
            feats = np.arange(n_features)
        else:
            feats = np.sort(rng.choice(n_features, size=k, replace=False))
        found = _best_split(X[idx], r, feats, hp.min_samples_leaf)
        if found is None:
            continue
        gain, f, thr, mask = found
        importances[f] += gain
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return RegressionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
    )


@dataclass
class GbrtModel:
    init_value: float
    learning_rate: float
    n_features: int
    trees: list[RegressionTree] = field(default_factory=list)
    importances: np.ndarray = None
    train_loss: list[float] = field(default_factory=list)
    hyperparams: GbrtHyperparams | None = None

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"dimension mismatch: model has {self.n_features} features, got {X.shape[1]}")
        out = np.full(X.shape[0], self.init_value)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out

    def to_dict(self) -> dict:
        return {
            "init_value": self.init_value,
            "learning_rate": self.learning_rate,
            "n_features": self.n_features,
            "importances": self.importances.tolist(),
            "hyperparams": asdict(self.hyperparams) if self.hyperparams else None,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbrtModel":
        hp = GbrtHyperparams(**d["hyperparams"]) if d.get("hyperparams") else None
        return cls(
            init_value=float(d["init_value"]),
            learning_rate=float(d["learning_rate"]),
            n_features=int(d["n_features"]),
            trees=[RegressionTree.from_dict(t) for t in d["trees"]],
            importances=np.array(d["importances"], dtype=float),
            hyperparams=hp,
        )


def gbrt_train(features, targets, hp: GbrtHyperparams | None = None) -> GbrtModel:
    """Fit an additive tree ensemble to squared-error residuals.

    Each stage fits one tree to the current residuals and adds it with weight
    ``hp.learning_rate``.  Candidate columns per split are drawn from a
    generator seeded by ``hp.seed``.  Importances are total split gains per
    column, normalized to sum to one (all zeros if no split was made).
    """
    hp = hp or GbrtHyperparams()
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("gbrt_train needs a non-empty 2-D feature matrix")
    if y.shape != (X.shape[0],):
        raise DataError(f"targets shape {y.shape} does not match {X.shape[0]} rows")
    if X.shape[0] < 2:
        raise DataError("gbrt_train needs at least 2 rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("features and targets must be finite")

    rng = np.random.default_rng(hp.seed)
    model = GbrtModel(float(y.mean()), hp.learning_rate, X.shape[1], hyperparams=hp)
    gains = np.zeros(X.shape[1])
    pred = np.full(y.shape, model.init_value)
    model.train_loss.append(float(np.mean((y - pred) ** 2)))
    for _ in range(hp.n_estimators):
        tree = fit_tree(X, y - pred, hp, rng, gains)
        model.trees.append(tree)
        pred += hp.learning_rate * tree.predict(X)
        model.train_loss.append(float(np.mean((y - pred) ** 2)))
    total = gains.sum()
    model.importances = gains / total if total > 0 else np.zeros_like(gains)
    return model


def gbrt_predict(m: GbrtModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("gbrt_predict takes a single feature vector")
    return float(m.predict(x[None, :])[0])


def r_squared(pred, actual) -> float:
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape or actual.size == 0:
        raise ValueError("pred and actual must have equal nonzero length")
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0:
        raise ValueError("undefined R²: actual values are constant")
    ss_res = float(np.sum((actual - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def kfold_indices(n_rows: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle cut into ``k`` contiguous test folds."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n_rows:
        raise ValueError(f"k={k} exceeds the {n_rows} available rows")
    perm = np.random.default_rng(seed).permutation(n_rows)
    return np.array_split(perm, k)


def kfold_cv(features, targets, hp: GbrtHyperparams, k: int = 5, seed: int = 0) -> tuple[list[float], float]:
    """Per-fold held-out R² and their mean."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    folds = kfold_indices(X.shape[0], k, seed)
    scores = []
    for test in folds:
        train_mask = np.ones(X.shape[0], dtype=bool)
        train_mask[test] = False
        model = gbrt_train(X[train_mask], y[train_mask], hp)
        scores.append(r_squared(model.predict(X[test]), y[test]))
    return scores, float(np.mean(scores))
