from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y


class ClassMissing(ValueError):
    def __init__(self, cls: int):
        super().__init__(f"class {cls} has no training samples")
        self.cls = cls


class DimensionMismatch(ValueError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} features, got {got}")
        self.expected = expected
        self.got = got


class BaseClassifier(ClassifierMixin, BaseEstimator):
    """Shared label encoding and input checks.

    Labels are mapped onto ``classes_``; when the estimator has an
    ``n_classes`` hyperparameter set, ``classes_`` is ``0..n_classes-1``
    and every class must appear in the training labels.
    """

    _require_all_classes = False

    def _validate_fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        n_classes = getattr(self, "n_classes", None)
        if n_classes is not None:
            self.classes_ = np.arange(n_classes)
            if y.min() < 0 or y.max() >= n_classes:
                raise ValueError(f"labels must lie in [0, {n_classes})")
            if self._require_all_classes:
                present = np.bincount(y.astype(np.int64), minlength=n_classes)
                for c in range(n_classes):
                    if present[c] == 0:
                        raise ClassMissing(c)
        else:
            self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        return X, np.searchsorted(self.classes_, y)

    def _validate_predict(self, X):
        check_is_fitted(self, "classes_")
        X = check_array(X, dtype=np.float64, ensure_min_samples=0)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(self.n_features_in_, X.shape[1])
        return X

    def predict(self, X):
        X = self._validate_predict(X)
        if X.shape[0] == 0:
            return self.classes_[:0].copy()
        # argmax returns the first maximum, so ties go to the lowest class index
        return self.classes_[np.argmax(self._scores(X), axis=1)]

    def _scores(self, X):  # pragma: no cover - abstract
        raise NotImplementedError


__all__ = ["BaseClassifier", "ClassMissing", "DimensionMismatch", "NotFittedError"]
