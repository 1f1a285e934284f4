"""CART regression trees, bagging and random forests written from scratch.

Trees are grown to purity without pruning. Splits minimise the summed squared
error of the two children; ties go to the lowest feature index, then the
lowest threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

MODES = ("random_forest", "bagging")

# Relative slack used when comparing SSE values, so that exact ties in real
# arithmetic are not broken by float round-off.
_SSE_RTOL = 1e-9


@dataclass
class TreeNode:
    """Either a leaf (``feature is None``) or an internal ``x[feature] <= threshold`` split."""

    prediction: float
    count: int
    feature: int | None = None
    threshold: float | None = None
    left: TreeNode | None = None
    right: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"prediction": self.prediction, "count": self.count}
        return {"feature_index": self.feature, "threshold": self.threshold,
                "prediction": self.prediction, "count": self.count,
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> TreeNode:
        if "feature_index" not in d:
            return cls(prediction=float(d["prediction"]), count=int(d["count"]))
        return cls(prediction=float(d["prediction"]), count=int(d["count"]),
                   feature=int(d["feature_index"]), threshold=float(d["threshold"]),
                   left=cls.from_dict(d["left"]), right=cls.from_dict(d["right"]))

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def n_leaves(self) -> int:
        if self.is_leaf:
            return 1
        return self.left.n_leaves() + self.right.n_leaves()


def _sse(y: np.ndarray) -> float:
    return float(np.sum((y - y.mean()) ** 2)) if y.size else 0.0


def best_split(X, y, features=None) -> tuple[int, float] | None:
    """Best ``(feature_index, threshold)`` split of the rows, or ``None``.

    Thresholds are midpoints between consecutive distinct sorted values of a
    feature. ``None`` is returned when no split lowers the node SSE.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 2:
        return None
    features = np.arange(X.shape[1]) if features is None else np.sort(np.asarray(features, int))
    yc = y - y.mean()
    parent = float(yc @ yc)
    if parent <= 0.0:
        return None

    xs = X[:, features]
    order = np.argsort(xs, axis=0, kind="stable")
    xs = np.take_along_axis(xs, order, axis=0)
    ys = yc[order]
    s1 = np.cumsum(ys, axis=0)[:-1]
    s2 = np.cumsum(ys * ys, axis=0)[:-1]
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    tot1 = s1[-1] + ys[-1]
    tot2 = s2[-1] + ys[-1] ** 2
    sse = (s2 - s1 ** 2 / n_left) + ((tot2 - s2) - (tot1 - s1) ** 2 / n_right)
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)
    best = sse.min()
    if not best < parent * (1.0 - _SSE_RTOL):
        return None

    # Among near-ties pick lowest feature, then lowest threshold.
    tied = sse <= best + _SSE_RTOL * parent
    col = int(np.flatnonzero(tied.any(axis=0))[0])
    row = int(np.flatnonzero(tied[:, col])[0])
    lo, hi = xs[row, col], xs[row + 1, col]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return int(features[col]), float(thr)


def fit_tree(X, y, features_per_split: int | None = None, rng=None) -> TreeNode:
    """Grow a full-depth regression tree.

    At each node ``features_per_split`` candidate features are drawn without
    replacement (all features when it equals ``p``).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < 1:
        raise ValueError("cannot fit a tree on zero rows")
    p = X.shape[1]
    k = p if features_per_split is None else int(features_per_split)
    if not 1 <= k <= p:
        raise ValueError(f"features_per_split must be in [1, {p}], got {k}")
    rng = np.random.default_rng(rng)

    root = TreeNode(prediction=float(y.mean()), count=y.size)
    stack = [(root, np.arange(y.size))]
    while stack:
        node, idx = stack.pop()
        yi = y[idx]
        if idx.size < 2 or yi.min() == yi.max():
            continue
        feats = np.arange(p) if k == p else rng.choice(p, size=k, replace=False)
        split = best_split(X[idx], yi, feats)
        if split is None:
            continue
        f, thr = split
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        node.feature, node.threshold = f, thr
        node.left = TreeNode(prediction=float(y[li].mean()), count=li.size)
        node.right = TreeNode(prediction=float(y[ri].mean()), count=ri.size)
        # right pushed first so the left subtree is expanded first
        stack.append((node.right, ri))
        stack.append((node.left, li))
    return root


def predict_tree(node: TreeNode, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(X.shape[0])
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if idx.size == 0:
            continue
        if nd.is_leaf:
            out[idx] = nd.prediction
            continue
        left = X[idx, nd.feature] <= nd.threshold
        stack.append((nd.left, idx[left]))
        stack.append((nd.right, idx[~left]))
    return out


@dataclass
class ForestModel:
    trees: list[TreeNode]
    mode: str
    features_per_split: int
    n_features: int
    seed: int
    bootstrap: bool = True
    oob_mse: float | None = None
    split_counts: list[int] = field(default_factory=list)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return np.mean([predict_tree(t, X) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "features_per_split": self.features_per_split,
                "n_features": self.n_features, "seed": self.seed, "bootstrap": self.bootstrap,
                "oob_mse": self.oob_mse, "split_counts": self.split_counts,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> ForestModel:
        return cls(trees=[TreeNode.from_dict(t) for t in d["trees"]], mode=d["mode"],
                   features_per_split=int(d["features_per_split"]),
                   n_features=int(d["n_features"]), seed=int(d["seed"]),
                   bootstrap=bool(d.get("bootstrap", True)), oob_mse=d.get("oob_mse"),
                   split_counts=list(d.get("split_counts", [])))


def features_for_mode(mode: str, p: int) -> int:
    if mode == "random_forest":
        return max(1, math.isqrt(p))
    if mode == "bagging":
        return p
    raise ValueError(f"unknown forest mode {mode!r}; expected one of {MODES}")


def _count_splits(node: TreeNode, counts: np.ndarray) -> None:
    stack = [node]
    while stack:
        nd = stack.pop()
        if not nd.is_leaf:
            counts[nd.feature] += 1
            stack.extend((nd.left, nd.right))


def fit_forest(X, y, mode: str = "random_forest", n_trees: int = 200, seed: int = 0,
               bootstrap: bool = True, threads: int = 1) -> ForestModel:
    """Train an ensemble of full-depth trees on bootstrap resamples.

    Each tree gets its own generator spawned from ``seed``, so the model does
    not depend on ``threads``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if y.size == 0 or X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("training set must be a non-empty (n, p) matrix with n targets")
    n, p = X.shape
    k = features_for_mode(mode, p)
    children = np.random.SeedSequence(seed).spawn(n_trees)

    def grow(ss):
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        return fit_tree(X[rows], y[rows], k, rng), rows

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            grown = list(pool.map(grow, children))
    else:
        grown = [grow(ss) for ss in children]
    trees = [t for t, _ in grown]

    oob_mse = None
    if bootstrap:
        sums, hits = np.zeros(n), np.zeros(n)
        for tree, rows in grown:
            out = np.ones(n, bool)
            out[rows] = False
            if out.any():
                sums[out] += predict_tree(tree, X[out])
                hits[out] += 1
        seen = hits > 0
        if seen.any():
            oob_mse = float(np.mean((sums[seen] / hits[seen] - y[seen]) ** 2))

    counts = np.zeros(p, dtype=int)
    for t in trees:
        _count_splits(t, counts)
    return ForestModel(trees=trees, mode=mode, features_per_split=k, n_features=p, seed=seed,
                       bootstrap=bootstrap, oob_mse=oob_mse, split_counts=counts.tolist())


def predict(model: ForestModel, X) -> np.ndarray:
    return model.predict(X)


def class_score(prediction: float, true_class: int) -> float:
    """Probability-like score ``max(0, 1 - |m - C|)`` of a regression output."""
    return max(0.0, 1.0 - abs(float(prediction) - float(true_class)))


def predicted_class(prediction: float, n_classes: int) -> int:
    return int(min(max(math.floor(float(prediction) + 0.5), 0), n_classes - 1))
