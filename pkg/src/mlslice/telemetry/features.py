"""Flow featurisation and z-score scaling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .records import PROTOS, FlowRecord

NUMERIC_FEATURES = ("duration_s", "s_load", "r_load", "s_pkts", "r_pkts", "s_bytes", "r_bytes")
FEATURE_NAMES = NUMERIC_FEATURES + tuple(f"proto_{p.value}" for p in PROTOS)


def records_to_matrix(records: Sequence[FlowRecord], log_scale: bool = True) -> np.ndarray:
    """Raw feature matrix in FEATURE_NAMES order.

    Numeric columns are log1p-compressed when ``log_scale`` is set; the
    flow quantities are heavy-tailed and span several decades.
    """
    n = len(records)
    X = np.zeros((n, len(FEATURE_NAMES)))
    for i, r in enumerate(records):
        X[i, :7] = (r.duration_s, r.s_load, r.r_load, r.s_pkts, r.r_pkts, r.s_bytes, r.r_bytes)
        X[i, 7 + PROTOS.index(r.proto)] = 1.0
    if log_scale:
        X[:, :7] = np.log1p(X[:, :7])
    return X


def labels_of(records: Sequence[FlowRecord]) -> np.ndarray:
    return np.array([r.label.index for r in records], dtype=np.int64)


class FlowScaler(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Z-score standardiser; constant columns keep std 1 so they map to 0."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        return np.asarray(X) * self.scale_ + self.mean_


@dataclass
class Featurized:
    matrix: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def apply(self, records: Sequence[FlowRecord], log_scale: bool = True) -> np.ndarray:
        """Standardise new records with the statistics fitted here."""
        return (records_to_matrix(records, log_scale) - self.mean) / self.std


def featurize(records: Sequence[FlowRecord], log_scale: bool = True) -> Featurized:
    if len(records) == 0:
        raise ValueError("featurize needs at least one record")
    X = records_to_matrix(records, log_scale)
    scaler = FlowScaler().fit(X)
    return Featurized(
        matrix=scaler.transform(X),
        labels=labels_of(records),
        feature_names=FEATURE_NAMES,
        mean=scaler.mean_,
        std=scaler.scale_,
    )
