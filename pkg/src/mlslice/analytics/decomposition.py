"""PCA by covariance eigendecomposition and loading-based feature importance."""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray  # rows are principal axes
    explained_variance: np.ndarray
    mean: np.ndarray


def _orient(V):
    # make each row's largest-magnitude entry positive (first such entry on ties)
    idx = np.argmax(np.abs(V), axis=1)
    signs = np.sign(V[np.arange(len(V)), idx])
    signs[signs == 0] = 1.0
    return V * signs[:, None]


def pca(matrix) -> PcaResult:
    """Full PCA of the sample covariance (divisor n - 1)."""
    X = check_array(matrix, dtype=np.float64, ensure_min_samples=1)
    n = X.shape[0]
    if n < 2:
        raise DegenerateInput("PCA needs at least 2 samples")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    w, V = np.linalg.eigh(cov)
    order = np.argsort(w, kind="stable")[::-1]
    w = np.clip(w[order], 0.0, None)
    return PcaResult(_orient(V[:, order].T), w, mean)


class PCA(TransformerMixin, BaseEstimator):
    """Estimator form of :func:`pca`, keeping the first ``n_components`` axes."""

    def __init__(self, n_components=None):
        self.n_components = n_components

    def fit(self, X, y=None):
        r = pca(X)
        m = self.n_components or len(r.explained_variance)
        self.components_ = r.components[:m]
        self.explained_variance_ = r.explained_variance[:m]
        self.mean_ = r.mean
        self.n_features_in_ = len(r.mean)
        total = r.explained_variance.sum()
        self.explained_variance_ratio_ = self.explained_variance_ / total if total > 0 else np.zeros(m)
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        return (check_array(X, dtype=np.float64) - self.mean_) @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        return np.asarray(Z) @ self.components_ + self.mean_


def top_loadings(result: PcaResult, n_components: int, feature_names: Sequence[str]) -> list[tuple[int, str, float]]:
    """(component, feature, |loading|) of the largest-|loading| feature per component.

    Ties go to the lowest feature index.
    """
    m, d = result.components.shape
    if not 1 <= n_components <= m:
        raise ValueError(f"n_components must be in [1, {m}]")
    if len(feature_names) != d:
        raise ValueError("feature_names length does not match the components")
    out = []
    for j in range(n_components):
        a = np.abs(result.components[j])
        i = int(np.argmax(a))
        out.append((j, feature_names[i], float(a[i])))
    return out


def top_features(result: PcaResult, n_components: int, feature_names: Sequence[str]) -> list[tuple[int, str]]:
    return [(j, f) for j, f, _ in top_loadings(result, n_components, feature_names)]


@dataclass
class FeatureImportanceReport:
    per_dataset: dict[str, list[tuple[int, str, float]]]
    frequency: dict[str, int] = field(default_factory=dict)

    def ranking(self) -> list[tuple[str, int]]:
        """Features by descending count; ties keep first-seen order."""
        return sorted(self.frequency.items(), key=lambda kv: -kv[1])

    def to_json(self) -> str:
        return json.dumps(
            {
                "per_dataset": {k: [list(t) for t in v] for k, v in self.per_dataset.items()},
                "frequency": self.frequency,
                "ranking": [list(t) for t in self.ranking()],
            },
            indent=2,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature", "count"])
        w.writerows(self.ranking())
        return buf.getvalue()


def importance_frequency(per_dataset: Mapping[str, Sequence[tuple]], feature_names: Sequence[str] | None = None) -> FeatureImportanceReport:
    """Count, over every (dataset, component), which feature was top.

    ``per_dataset`` maps a dataset id to the output of ``top_loadings`` or
    ``top_features``. When ``feature_names`` is given, every feature gets
    an entry (zero if never top) in that order.
    """
    if not per_dataset:
        raise ValueError("need at least one dataset")
    counts = Counter(t[1] for rows in per_dataset.values() for t in rows)
    order = list(feature_names) if feature_names is not None else list(dict.fromkeys(
        t[1] for rows in per_dataset.values() for t in rows))
    freq = {f: counts.get(f, 0) for f in order}
    return FeatureImportanceReport({k: [tuple(t) for t in v] for k, v in per_dataset.items()}, freq)
