"""CART trees and bagged tree ensembles."""
from __future__ import annotations

import numbers

import numpy as np

from ._base import BaseClassifier


def _resolve_max_features(max_features, n_features: int) -> int:
    if max_features is None:
        return n_features
    if max_features == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    if max_features == "log2":
        return max(1, int(np.log2(n_features)))
    if isinstance(max_features, numbers.Integral):
        return int(min(max(1, max_features), n_features))
    if isinstance(max_features, numbers.Real):
        return max(1, int(max_features * n_features))
    raise ValueError(f"bad max_features {max_features!r}")


def gini_impurity(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    return 0.0 if n == 0 else 1.0 - float(np.sum((counts / n) ** 2))


class _TreeBuilder:
    """Grows one tree into flat arrays.

    Samples with ``x[feature] <= threshold`` go left.
    """

    def __init__(self, n_classes, max_depth, min_samples_split, min_samples_leaf, n_candidates, random_splits, rng):
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.n_candidates = n_candidates
        self.random_splits = random_splits
        self.rng = rng

    def build(self, X, Y):
        self.X, self.Y = X, Y
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        root = self._new_node(np.arange(X.shape[0]))
        stack = [(root, np.arange(X.shape[0]), 0)]
        while stack:
            node, idx, depth = stack.pop()
            split = self._maybe_split(idx, depth)
            if split is None:
                continue
            f, thr, mask = split
            li, ri = idx[mask], idx[~mask]
            ln, rn = self._new_node(li), self._new_node(ri)
            self.feature[node], self.threshold[node] = f, thr
            self.left[node], self.right[node] = ln, rn
            stack.append((rn, ri, depth + 1))
            stack.append((ln, li, depth + 1))
        return (
            np.array(self.feature, dtype=np.int64),
            np.array(self.threshold, dtype=np.float64),
            np.array(self.left, dtype=np.int64),
            np.array(self.right, dtype=np.int64),
            np.array(self.value, dtype=np.float64),
        )

    def _new_node(self, idx):
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(self.Y[idx].sum(axis=0))
        return len(self.feature) - 1

    def _maybe_split(self, idx, depth):
        n = idx.size
        counts = self.Y[idx].sum(axis=0)
        if (
            n < self.min_samples_split
            or n < 2 * self.min_samples_leaf
            or np.count_nonzero(counts) <= 1
            or (self.max_depth is not None and depth >= self.max_depth)
        ):
            return None
        d = self.X.shape[1]
        if self.n_candidates < d:
            order = self.rng.permutation(d)
            first, rest = np.sort(order[: self.n_candidates]), order[self.n_candidates:]
        else:
            first, rest = np.arange(d), np.array([], dtype=np.int64)
        best = self._best_split(idx, first)
        # keep drawing features until one yields a valid split, as CART implementations do
        for f in rest:
            if best is not None:
                break
            best = self._best_split(idx, [f])
        if best is None:
            return None
        _, f, thr = best
        return f, thr, self.X[idx, f] <= thr

    def _best_split(self, idx, features):
        best = None
        Y = self.Y[idx]
        n = idx.size
        leaf = self.min_samples_leaf
        for f in features:
            x = self.X[idx, f]
            if self.random_splits:
                lo, hi = x.min(), x.max()
                if lo == hi:
                    continue
                thr = self.rng.uniform(lo, hi)
                mask = x <= thr
                nl = int(mask.sum())
                if nl < leaf or n - nl < leaf:
                    continue
                cl = Y[mask].sum(axis=0)
                cr = Y.sum(axis=0) - cl
                score = float(np.sum(cl**2)) / nl + float(np.sum(cr**2)) / (n - nl)
                if best is None or score > best[0]:
                    best = (score, int(f), float(thr))
                continue
            order = np.argsort(x, kind="stable")
            xs = x[order]
            cum = np.cumsum(Y[order], axis=0)[:-1]  # left counts for split after position i
            nl = np.arange(1, n, dtype=np.float64)
            valid = xs[1:] > xs[:-1]
            valid &= (nl >= leaf) & (n - nl >= leaf)
            if not valid.any():
                continue
            total = cum[-1] + Y[order[-1]]
            cr = total - cum
            score = np.sum(cum**2, axis=1) / nl + np.sum(cr**2, axis=1) / (n - nl)
            score = np.where(valid, score, -np.inf)
            i = int(np.argmax(score))
            if best is None or score[i] > best[0]:
                thr = 0.5 * (xs[i] + xs[i + 1])
                if not thr < xs[i + 1]:
                    thr = xs[i]
                best = (float(score[i]), int(f), float(thr))
        return best


def _apply(tree, X):
    feature, threshold, left, right, _ = tree
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = np.flatnonzero(feature[node] >= 0)
    while active.size:
        nd = node[active]
        go_left = X[active, feature[nd]] <= threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = active[feature[node[active]] >= 0]
    return node


class DecisionTreeClassifier(BaseClassifier):
    """CART classifier with Gini impurity.

    Parameters
    ----------
    max_depth : int or None
    min_samples_split : int
    min_samples_leaf : int
    max_features : None, "sqrt", "log2", int or float
        Features considered per split; None means all.
    seed : int
    """

    _random_splits = False

    def __init__(self, max_depth=None, min_samples_split=2, min_samples_leaf=1, max_features=None, seed=0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.seed = seed

    def fit(self, X, y):
        X, yi = self._validate_fit(X, y)
        Y = np.eye(len(self.classes_))[yi]
        self.tree_ = self._grow(X, Y, np.random.default_rng(self.seed))
        return self

    def _grow(self, X, Y, rng):
        builder = _TreeBuilder(
            Y.shape[1],
            self.max_depth,
            self.min_samples_split,
            self.min_samples_leaf,
            _resolve_max_features(self.max_features, X.shape[1]),
            self._random_splits,
            rng,
        )
        return builder.build(X, Y)

    @property
    def node_count(self) -> int:
        return len(self.tree_[0])

    def apply(self, X):
        return _apply(self.tree_, self._validate_predict(X))

    def predict_proba(self, X):
        X = self._validate_predict(X)
        return self._scores(X)

    def _scores(self, X):
        counts = self.tree_[4][_apply(self.tree_, X)]
        return counts / counts.sum(axis=1, keepdims=True)


class ExtraTreeClassifier(DecisionTreeClassifier):
    """Single extremely randomised tree: one uniform threshold per candidate feature."""

    _random_splits = True


class RandomForestClassifier(BaseClassifier):
    """Bootstrap-aggregated CART trees with per-split feature subsampling.

    Class probabilities are averaged across trees.
    """

    _random_splits = False

    def __init__(self, n_estimators=100, max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features="sqrt", bootstrap=True, seed=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed

    def _tree_template(self):
        cls = ExtraTreeClassifier if self._random_splits else DecisionTreeClassifier
        return cls(self.max_depth, self.min_samples_split, self.min_samples_leaf, self.max_features)

    def fit(self, X, y):
        X, yi = self._validate_fit(X, y)
        Y = np.eye(len(self.classes_))[yi]
        n = X.shape[0]
        template = self._tree_template()
        self.estimators_ = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_estimators):
            rng = np.random.default_rng(child)
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            self.estimators_.append(template._grow(X[rows], Y[rows], rng))
        return self

    def predict_proba(self, X):
        return self._scores(self._validate_predict(X))

    def _scores(self, X):
        proba = np.zeros((X.shape[0], len(self.classes_)))
        for tree in self.estimators_:
            counts = tree[4][_apply(tree, X)]
            proba += counts / counts.sum(axis=1, keepdims=True)
        return proba / len(self.estimators_)


class ExtraTreesClassifier(RandomForestClassifier):
    """Extremely randomised trees: random thresholds, no bootstrap by default."""

    _random_splits = True

    def __init__(self, n_estimators=100, max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features="sqrt", bootstrap=False, seed=0):
        super().__init__(n_estimators, max_depth, min_samples_split, min_samples_leaf, max_features, bootstrap, seed)
