"""From-scratch classifiers and cross-validated evaluation."""
from ._base import ClassMissing, DimensionMismatch, NotFittedError
from .linear import RidgeClassifier, SoftmaxRegression, softmax
from .model_selection import (
    ClassTooSmall,
    EvalConfig,
    EvalReport,
    StratifiedKFold,
    evaluate,
    stratified_kfold,
)
from .neighbors import KNeighborsClassifier
from .qda import QuadraticDiscriminantAnalysis, SingularCovariance
from .registry import ALGORITHMS, DEFAULT_HYPERPARAMS, NOT_IMPLEMENTED, make_classifier
from .tree import DecisionTreeClassifier, ExtraTreeClassifier, ExtraTreesClassifier, RandomForestClassifier

__all__ = [
    "ALGORITHMS",
    "ClassMissing",
    "ClassTooSmall",
    "DEFAULT_HYPERPARAMS",
    "DecisionTreeClassifier",
    "DimensionMismatch",
    "EvalConfig",
    "EvalReport",
    "ExtraTreeClassifier",
    "ExtraTreesClassifier",
    "KNeighborsClassifier",
    "NOT_IMPLEMENTED",
    "NotFittedError",
    "QuadraticDiscriminantAnalysis",
    "RandomForestClassifier",
    "RidgeClassifier",
    "SingularCovariance",
    "SoftmaxRegression",
    "StratifiedKFold",
    "evaluate",
    "make_classifier",
    "softmax",
    "stratified_kfold",
]
