"""Ridge and multinomial softmax classifiers."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_is_fitted

from ._base import BaseClassifier


def _augment(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


class RidgeClassifier(BaseClassifier):
    """One-vs-all least squares on one-hot targets, solved in closed form.

    The bias is folded into the design matrix as a column of ones and
    penalised along with the weights, so ``coef_`` stacks both and solves
    ``(A^T A + alpha I) W = A^T Y`` exactly.
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y):
        X, yi = self._validate_fit(X, y)
        A = _augment(X)
        Y = np.eye(len(self.classes_))[yi]
        self.gram_ = A.T @ A + self.alpha * np.eye(A.shape[1])
        self.rhs_ = A.T @ Y
        self.coef_ = np.linalg.solve(self.gram_, self.rhs_)
        return self

    def decision_function(self, X):
        return self._scores(self._validate_predict(X))

    def _scores(self, X):
        return _augment(X) @ self.coef_


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(proba, yi) -> float:
    p = proba[np.arange(len(yi)), yi]
    return float(-np.mean(np.log(np.clip(p, 1e-300, None))))


class SoftmaxRegression(BaseClassifier):
    """Multinomial logistic regression trained by mini-batch gradient descent.

    Weights start at zero. Epoch ``e`` (counted globally, see
    ``train_epochs``) shuffles rows with ``default_rng([seed, e])`` and uses
    step ``learning_rate / (1 + decay * e)``, so training split across calls
    follows the same trajectory as one long call.

    Parameters
    ----------
    n_classes : int or None
        Fix the label space to ``0..n_classes-1``; needed when a training
        set may lack some classes (federated agents).
    """

    _require_all_classes = True

    def __init__(self, n_classes=None, learning_rate=0.5, epochs=20, batch_size=32, l2=1e-4, decay=0.0, seed=0):
        self.n_classes = n_classes
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.l2 = l2
        self.decay = decay
        self.seed = seed

    def fit(self, X, y):
        X, yi = self._validate_fit(X, y)
        self.init_params(X.shape[1])
        self._run(X, yi, 0, self.epochs)
        return self

    def init_params(self, n_features, coef=None, intercept=None):
        """Set starting parameters (zeros by default) without training."""
        if not hasattr(self, "classes_"):
            if self.n_classes is None:
                raise ValueError("init_params needs n_classes or a prior fit")
            self.classes_ = np.arange(self.n_classes)
        c = len(self.classes_)
        self.n_features_in_ = n_features
        self.coef_ = np.zeros((n_features, c)) if coef is None else np.array(coef, dtype=np.float64).reshape(n_features, c)
        self.intercept_ = np.zeros(c) if intercept is None else np.array(intercept, dtype=np.float64).reshape(c)
        return self

    def train_epochs(self, X, y, n_epochs, start_epoch=0):
        """Continue training from the current parameters."""
        check_is_fitted(self, "coef_")
        X = self._validate_predict(X)
        yi = np.searchsorted(self.classes_, np.asarray(y))
        self._run(X, yi, start_epoch, n_epochs)
        return self

    def _run(self, X, yi, start, n_epochs):
        n = X.shape[0]
        Y = np.eye(len(self.classes_))[yi]
        W, b = self.coef_, self.intercept_
        for e in range(start, start + n_epochs):
            lr = self.learning_rate / (1.0 + self.decay * e)
            order = np.random.default_rng([self.seed, e]).permutation(n)
            for s in range(0, n, self.batch_size):
                rows = order[s:s + self.batch_size]
                err = softmax(X[rows] @ W + b) - Y[rows]
                W = W - lr * (X[rows].T @ err / len(rows) + self.l2 * W)
                b = b - lr * err.mean(axis=0)
        self.coef_, self.intercept_ = W, b

    def _scores(self, X):
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        return softmax(self._scores(self._validate_predict(X)))

    def loss(self, X, y) -> float:
        """Mean cross-entropy on (X, y)."""
        proba = self.predict_proba(X)
        return cross_entropy(proba, np.searchsorted(self.classes_, np.asarray(y)))
