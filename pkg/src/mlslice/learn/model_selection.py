"""Stratified k-fold splitting and cross-validated evaluation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..telemetry.features import FlowScaler
from .registry import DEFAULT_HYPERPARAMS, make_classifier

Z95 = 1.959963984540054


class ClassTooSmall(ValueError):
    def __init__(self, cls: int, count: int, n_folds: int):
        super().__init__(f"class {cls} has {count} samples, fewer than {n_folds} folds")
        self.cls = cls


@dataclass(frozen=True)
class EvalConfig:
    n_folds: int = 10
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")


def stratified_kfold(labels, config: EvalConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split indices into ``config.n_folds`` (train, test) pairs.

    Each class is shuffled on its own, the shuffled classes are laid end to
    end, and position ``i`` of that sequence goes to fold ``i % k``. Every
    class then lands in each fold ``floor`` or ``ceil`` of ``n_c / k`` times.
    """
    y = np.asarray(labels)
    k = config.n_folds
    rng = np.random.default_rng(config.seed)
    if config.stratified:
        classes, counts = np.unique(y, return_counts=True)
        for c, n_c in zip(classes, counts):
            if n_c < k:
                raise ClassTooSmall(int(c), int(n_c), k)
        order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in classes]) if len(y) else np.array([], dtype=np.int64)
    else:
        if len(y) < k:
            raise ValueError(f"{len(y)} samples cannot fill {k} folds")
        order = rng.permutation(len(y))
    fold_of = np.empty(len(y), dtype=np.int64)
    fold_of[order] = np.arange(len(y)) % k
    idx = np.arange(len(y))
    return [(idx[fold_of != f], idx[fold_of == f]) for f in range(k)]


class StratifiedKFold:
    """Splitter object with the familiar ``split(X, y)`` interface."""

    def __init__(self, n_splits=10, seed=0, stratified=True):
        self.n_splits = n_splits
        self.seed = seed
        self.stratified = stratified

    def split(self, X, y):
        return iter(stratified_kfold(y, EvalConfig(self.n_splits, self.seed, self.stratified)))

    def get_n_splits(self, X=None, y=None):
        return self.n_splits


@dataclass
class EvalReport:
    algorithm: str
    hyperparams: dict
    n_folds: int
    seed: int
    per_fold_accuracy: list[float]
    mean_accuracy: float
    ci95_halfwidth: float
    confusion: list[list[int]]
    per_class_recall: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_class_recall"] = {str(k): v for k, v in self.per_class_recall.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        """One row per fold, then the summary row."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold", "accuracy"])
        for i, a in enumerate(self.per_fold_accuracy):
            w.writerow([i, repr(a)])
        w.writerow(["mean", repr(self.mean_accuracy)])
        w.writerow(["ci95_halfwidth", repr(self.ci95_halfwidth)])
        return buf.getvalue()

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = len(self.confusion)
        w.writerow(["true\\pred", *range(n)])
        for i, row in enumerate(self.confusion):
            w.writerow([i, *row])
        return buf.getvalue()


def evaluate(
    algorithm: str,
    hyperparams: Mapping | None,
    matrix,
    labels,
    config: EvalConfig = EvalConfig(),
    *,
    n_classes: int | None = None,
    scaler_factory: Callable = FlowScaler,
) -> EvalReport:
    """Cross-validate one classifier.

    ``matrix`` holds unscaled features. A fresh scaler is fitted on each
    training fold and applied to the matching test fold. Folds are run and
    reduced in index order.
    """
    X = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    C = int(n_classes if n_classes is not None else y.max() + 1)
    confusion = np.zeros((C, C), dtype=np.int64)
    make_classifier(algorithm, **dict(hyperparams or {}))  # fail fast on bad names
    resolved = {**DEFAULT_HYPERPARAMS[algorithm], **dict(hyperparams or {})}
    accs = []
    for train, test in stratified_kfold(y, config):
        scaler = scaler_factory().fit(X[train])
        model = make_classifier(algorithm, **resolved)
        model.fit(scaler.transform(X[train]), y[train])
        pred = model.predict(scaler.transform(X[test]))
        np.add.at(confusion, (y[test], pred), 1)
        accs.append(float(np.mean(pred == y[test])))
    k = len(accs)
    mean = math.fsum(accs) / k
    sd = math.sqrt(math.fsum((a - mean) ** 2 for a in accs) / (k - 1))
    rows = confusion.sum(axis=1)
    recall = {c: float(confusion[c, c] / rows[c]) for c in range(C) if rows[c] > 0}
    return EvalReport(
        algorithm=algorithm,
        hyperparams=resolved,
        n_folds=k,
        seed=config.seed,
        per_fold_accuracy=accs,
        mean_accuracy=mean,
        ci95_halfwidth=Z95 * sd / math.sqrt(k),
        confusion=confusion.tolist(),
        per_class_recall=recall,
    )
