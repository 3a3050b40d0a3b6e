from __future__ import annotations

import numpy as np

from ._base import BaseClassifier

_CHUNK = 256


class KNeighborsClassifier(BaseClassifier):
    """Majority vote among the ``k`` nearest training rows (Euclidean).

    Distance ties are broken by training-row order, vote ties by the
    lowest class index.
    """

    def __init__(self, k=5):
        self.k = k

    def fit(self, X, y):
        X, yi = self._validate_fit(X, y)
        if not 1 <= self.k:
            raise ValueError("k must be >= 1")
        self.X_train_ = X
        self.y_train_ = yi
        return self

    def kneighbors(self, X):
        """Indices of the nearest training rows, closest first."""
        X = self._validate_predict(X)
        return self._kneighbors(X)

    def _kneighbors(self, X):
        k = min(self.k, self.X_train_.shape[0])
        out = np.empty((X.shape[0], k), dtype=np.int64)
        for start in range(0, X.shape[0], _CHUNK):
            block = X[start:start + _CHUNK]
            diff = block[:, None, :] - self.X_train_[None, :, :]
            dist = np.einsum("ijk,ijk->ij", diff, diff)
            # stable sort keeps lower training index first among equal distances
            out[start:start + _CHUNK] = np.argsort(dist, axis=1, kind="stable")[:, :k]
        return out

    def _scores(self, X):
        nbrs = self.y_train_[self._kneighbors(X)]
        n_classes = len(self.classes_)
        votes = np.zeros((X.shape[0], n_classes))
        for j in range(nbrs.shape[1]):
            votes[np.arange(X.shape[0]), nbrs[:, j]] += 1
        return votes

    def predict_proba(self, X):
        votes = self._scores(self._validate_predict(X))
        return votes / votes.sum(axis=1, keepdims=True)
