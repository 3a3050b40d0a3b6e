from __future__ import annotations

from .linear import RidgeClassifier, SoftmaxRegression
from .neighbors import KNeighborsClassifier
from .qda import QuadraticDiscriminantAnalysis
from .tree import DecisionTreeClassifier, ExtraTreesClassifier, RandomForestClassifier

ALGORITHMS = {
    "DecisionTree": DecisionTreeClassifier,
    "RandomForest": RandomForestClassifier,
    "ExtraTrees": ExtraTreesClassifier,
    "Knn": KNeighborsClassifier,
    "RidgeClassifier": RidgeClassifier,
    "Qda": QuadraticDiscriminantAnalysis,
    "SoftmaxRegression": SoftmaxRegression,
}

# Paper's comparison also lists boosted trees; those are deliberately absent.
NOT_IMPLEMENTED = ("XGBoost", "CatBoost")

HYPERPARAMS_VERSION = 1
DEFAULT_HYPERPARAMS = {
    "DecisionTree": {"max_depth": None, "min_samples_leaf": 1, "seed": 0},
    "RandomForest": {"n_estimators": 100, "max_features": "sqrt", "seed": 0},
    "ExtraTrees": {"n_estimators": 100, "max_features": "sqrt", "seed": 0},
    "Knn": {"k": 5},
    "RidgeClassifier": {"alpha": 1.0},
    "Qda": {"reg_param": 0.01},
    "SoftmaxRegression": {"learning_rate": 0.5, "epochs": 20, "batch_size": 32, "seed": 0},
}


def make_classifier(algorithm: str, **hyperparams):
    """Instantiate ``algorithm`` with its defaults overridden by ``hyperparams``."""
    try:
        cls = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    return cls(**{**DEFAULT_HYPERPARAMS[algorithm], **hyperparams})
