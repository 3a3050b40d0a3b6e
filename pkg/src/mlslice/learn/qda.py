from __future__ import annotations

import numpy as np

from ._base import BaseClassifier


class SingularCovariance(np.linalg.LinAlgError):
    def __init__(self, cls: int):
        super().__init__(f"covariance of class {cls} is singular; use reg_param > 0")
        self.cls = cls


class QuadraticDiscriminantAnalysis(BaseClassifier):
    """Gaussian class-conditional model with one covariance per class.

    Each class covariance is shrunk toward the identity,
    ``(1 - reg_param) * S_c + reg_param * I``, so any ``reg_param > 0``
    keeps it positive definite. ``reg_param=1`` with equal priors reduces
    to nearest-class-mean.

    Parameters
    ----------
    priors : array-like or None
        Class priors; None uses training frequencies.
    reg_param : float in [0, 1]
    """

    _require_all_classes = True

    def __init__(self, priors=None, reg_param=0.01, n_classes=None):
        self.priors = priors
        self.reg_param = reg_param
        self.n_classes = n_classes

    def fit(self, X, y):
        X, yi = self._validate_fit(X, y)
        C, d = len(self.classes_), X.shape[1]
        counts = np.bincount(yi, minlength=C)
        self.priors_ = counts / counts.sum() if self.priors is None else np.asarray(self.priors, dtype=np.float64)
        self.means_ = np.zeros((C, d))
        self._chol = []
        self._logdet = np.zeros(C)
        for c in range(C):
            Xc = X[yi == c]
            self.means_[c] = Xc.mean(axis=0)
            S = np.cov(Xc, rowvar=False, ddof=1).reshape(d, d) if len(Xc) > 1 else np.zeros((d, d))
            S = (1.0 - self.reg_param) * S + self.reg_param * np.eye(d)
            try:
                L = np.linalg.cholesky(S)
            except np.linalg.LinAlgError:
                raise SingularCovariance(int(self.classes_[c])) from None
            self._chol.append(L)
            self._logdet[c] = 2.0 * np.sum(np.log(np.diag(L)))
        return self

    def _scores(self, X):
        out = np.empty((X.shape[0], len(self.classes_)))
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.priors_)
        for c, L in enumerate(self._chol):
            z = np.linalg.solve(L, (X - self.means_[c]).T)
            out[:, c] = log_prior[c] - 0.5 * self._logdet[c] - 0.5 * np.sum(z**2, axis=0)
        return out

    def decision_function(self, X):
        return self._scores(self._validate_predict(X))

    def predict_proba(self, X):
        s = self.decision_function(X)
        s = np.exp(s - s.max(axis=1, keepdims=True))
        return s / s.sum(axis=1, keepdims=True)
