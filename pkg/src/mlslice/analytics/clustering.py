"""k-means (k-means++ seeding, Lloyd iterations) and elbow selection."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted


class KExceedsN(ValueError):
    def __init__(self, k: int, n: int):
        super().__init__(f"k={k} exceeds the {n} available points")
        self.k, self.n = k, n


class RangeTooSmall(ValueError):
    pass


class WcssIncreased(AssertionError):
    pass


@dataclass(frozen=True)
class ClusteringResult:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    wcss: float
    iterations: int


def _sq_dists(X, C):
    # exact squared distances, n x k
    return np.stack([np.einsum("ij,ij->i", X - c, X - c) for c in C], axis=1)


def _assign(X, C):
    d = _sq_dists(X, C)
    a = np.argmin(d, axis=1)  # first minimum -> lowest centroid index on ties
    return a, float(math.fsum(d[np.arange(len(X)), a]))


def _assign_fast(X, x2, C):
    # BLAS expansion for the inner loop; the final pass uses _assign
    d = x2[:, None] - 2.0 * (X @ C.T) + np.einsum("ij,ij->i", C, C)[None, :]
    a = np.argmin(d, axis=1)
    r = X - C[a]
    return a, float(np.einsum("ij,ij->", r, r))


def _plusplus(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.einsum("ij,ij->i", X - X[chosen[0]], X - X[chosen[0]])
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            i = int(rng.choice(n, p=d2 / total))
        else:  # all remaining points coincide with a centre
            rest = np.setdiff1d(np.arange(n), chosen)
            i = int(rng.choice(rest))
        chosen.append(i)
        d2 = np.minimum(d2, np.einsum("ij,ij->i", X - X[i], X - X[i]))
    return X[chosen].copy()


def _lloyd(X, k, rng, max_iter, tol, check_monotone):
    C = _plusplus(X, k, rng)
    x2 = np.einsum("ij,ij->i", X, X)
    prev = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        a, wcss = _assign_fast(X, x2, C)
        if check_monotone and wcss > prev * (1 + 1e-12) + 1e-12:
            raise WcssIncreased(f"iteration {it}: wcss {wcss} > {prev}")
        prev = wcss
        counts = np.bincount(a, minlength=k)
        sums = np.stack([np.bincount(a, weights=X[:, f], minlength=k) for f in range(X.shape[1])], axis=1)
        new = C.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        empty = np.flatnonzero(~filled).tolist()
        if empty:
            # reseed each empty cluster at the point farthest from its own centroid
            far = np.einsum("ij,ij->i", X - new[a], X - new[a])
            for j in empty:
                i = int(np.argmax(far))
                new[j] = X[i]
                far[i] = -1.0
        shift = float(np.max(np.linalg.norm(new - C, axis=1)))
        C = new
        if shift < tol:
            break
    a, wcss = _assign(X, C)
    if check_monotone and wcss > prev * (1 + 1e-9) + 1e-12:
        raise WcssIncreased(f"final wcss {wcss} > {prev}")
    return ClusteringResult(k, C, a, wcss, it)


def kmeans(matrix, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6,
           n_init: int = 1, check_monotone: bool = False) -> ClusteringResult:
    """Cluster ``matrix`` into ``k`` groups; best of ``n_init`` seeded restarts.

    Assignments always point at the nearest final centroid (lowest index on
    ties) and ``wcss`` is recomputed from them.
    """
    X = check_array(matrix, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k:
        raise ValueError("k must be >= 1")
    if k > n:
        raise KExceedsN(k, n)
    if max_iter < 1 or not tol > 0:
        raise ValueError("need max_iter >= 1 and tol > 0")
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_init):
        r = _lloyd(X, k, np.random.default_rng(child), max_iter, tol, check_monotone)
        if best is None or r.wcss < best.wcss:
            best = r
    return best


class KMeans(ClusterMixin, BaseEstimator):
    """Estimator wrapper around :func:`kmeans`."""

    def __init__(self, n_clusters=8, seed=0, max_iter=300, tol=1e-6, n_init=1, check_monotone=False):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.n_init = n_init
        self.check_monotone = check_monotone

    def fit(self, X, y=None):
        r = kmeans(X, self.n_clusters, self.seed, self.max_iter, self.tol, self.n_init, self.check_monotone)
        self.cluster_centers_ = r.centroids
        self.labels_ = r.assignments
        self.inertia_ = r.wcss
        self.n_iter_ = r.iterations
        self.n_features_in_ = r.centroids.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        return _assign(X, self.cluster_centers_)[0]


def knee_index(ks, wcss) -> int:
    """Index of the point farthest from the chord joining the curve's ends.

    Both axes are rescaled to [0, 1] by the endpoint span first, so the
    choice does not depend on the units of WCSS. Only interior points are
    candidates; distances within 1e-12 of the best count as ties and the
    smallest k wins.
    """
    x = np.asarray(ks, dtype=np.float64)
    y = np.asarray(wcss, dtype=np.float64)
    if len(x) < 3:
        raise RangeTooSmall("elbow selection needs at least 3 candidate k values")
    xs = (x - x[0]) / (x[-1] - x[0])
    span = y[0] - y[-1]
    ys = (y - y[-1]) / span if span != 0 else np.zeros_like(y)
    # chord from (0, ys[0]) to (1, 0); distance of (xs, ys) to that line
    x0, y0 = 0.0, ys[0]
    dx, dy = 1.0, -y0
    dist = np.abs(dy * (xs - x0) - dx * (ys - y0)) / math.hypot(dx, dy)
    inner = dist[1:-1]
    top = inner.max()
    return 1 + int(np.flatnonzero(inner >= top - 1e-12)[0])


@dataclass(frozen=True)
class ElbowResult:
    chosen_k: int
    ks: tuple[int, ...]
    wcss: tuple[float, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "wcss", "chosen"])
        for k, v in zip(self.ks, self.wcss):
            w.writerow([k, repr(v), int(k == self.chosen_k)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"chosen_k": self.chosen_k, "ks": list(self.ks), "wcss": list(self.wcss)}


def elbow_select(matrix, k_range=range(1, 16), seed: int = 0, n_init: int = 10, log_wcss: bool = True,
                 **kmeans_kw) -> ElbowResult:
    """Run k-means for each k in ``k_range`` and pick the knee of the WCSS curve.

    The knee rule (see ``knee_index``) is applied to log(WCSS) by default.
    On the raw curve the first few merges dominate when clusters are
    unevenly spaced, and the knee then drifts toward small k and moves
    with the end of ``k_range``; pass ``log_wcss=False`` for the raw curve.
    """
    X = check_array(matrix, dtype=np.float64)
    ks = tuple(int(k) for k in k_range)
    if len(ks) < 3:
        raise RangeTooSmall("elbow selection needs at least 3 candidate k values")
    if ks[0] < 1 or ks[-1] > X.shape[0]:
        raise KExceedsN(ks[-1], X.shape[0])
    curve = tuple(kmeans(X, k, seed=seed, n_init=n_init, **kmeans_kw).wcss for k in ks)
    score = np.log(np.maximum(curve, np.finfo(float).tiny)) if log_wcss else curve
    return ElbowResult(ks[knee_index(ks, score)], ks, curve)
