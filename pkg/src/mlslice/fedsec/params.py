"""Flat parameter vectors, agent reports and federated averaging."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class LayoutMismatch(ValueError):
    pass


class EmptyReportSet(ValueError):
    pass


Layout = tuple[tuple[str, tuple[int, ...]], ...]


@dataclass(frozen=True, eq=False)
class ModelParams:
    layout: Layout
    values: np.ndarray
    version: int = 0

    def __post_init__(self):
        layout = tuple((str(n), tuple(int(x) for x in shape)) for n, shape in self.layout)
        values = np.array(self.values, dtype=np.float64).ravel()
        values.flags.writeable = False
        size = sum(math.prod(shape) for _, shape in layout)
        if values.size != size:
            raise LayoutMismatch(f"layout needs {size} values, got {values.size}")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        return (
            isinstance(other, ModelParams)
            and self.layout == other.layout
            and self.version == other.version
            and np.array_equal(self.values, other.values)
        )

    def tensors(self) -> dict[str, np.ndarray]:
        out, start = {}, 0
        for name, shape in self.layout:
            size = math.prod(shape)
            out[name] = self.values[start:start + size].reshape(shape)
            start += size
        return out

    def to_dict(self) -> dict:
        return {
            "layout": [[n, list(s)] for n, s in self.layout],
            "values": self.values.tolist(),
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, d) -> "ModelParams":
        return cls(tuple((n, tuple(s)) for n, s in d["layout"]), d["values"], int(d["version"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ModelParams":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def softmax_layout(n_features: int, n_classes: int) -> Layout:
    return (("coef", (n_features, n_classes)), ("intercept", (n_classes,)))


def params_of(model, version: int = 0) -> ModelParams:
    """Snapshot a fitted SoftmaxRegression."""
    d, c = model.coef_.shape
    return ModelParams(softmax_layout(d, c), np.concatenate([model.coef_.ravel(), model.intercept_]), version)


def load_into(model, params: ModelParams):
    t = params.tensors()
    if "coef" not in t or "intercept" not in t:
        raise LayoutMismatch(f"not a softmax layout: {params.layout}")
    d, _ = t["coef"].shape
    model.init_params(d, t["coef"].copy(), t["intercept"].copy())
    return model


@dataclass(frozen=True)
class AgentReport:
    agent_id: str
    params: ModelParams
    n_samples: int
    train_loss: float
    train_accuracy: float

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass(frozen=True)
class RoundLog:
    round: int
    global_accuracy: float
    global_loss: float
    participating: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "global_accuracy": self.global_accuracy,
            "global_loss": self.global_loss,
            "participating": list(self.participating),
        }


def fedavg(reports: Sequence[AgentReport]) -> ModelParams:
    """Sample-weighted mean of the reported parameter vectors.

    Reports are reduced in agent_id order with weights ``n_i / N``, so any
    ordering of the input gives bitwise-identical output and a single report
    comes back unchanged.
    """
    if not reports:
        raise EmptyReportSet("fedavg needs at least one report")
    ordered = sorted(reports, key=lambda r: r.agent_id)
    layout = ordered[0].params.layout
    for r in ordered[1:]:
        if r.params.layout != layout:
            raise LayoutMismatch(f"agent {r.agent_id} layout {r.params.layout} != {layout}")
    total = sum(r.n_samples for r in ordered)
    acc = np.zeros_like(ordered[0].params.values)
    for r in ordered:
        acc += (r.n_samples / total) * r.params.values
    return ModelParams(layout, acc, max(r.params.version for r in ordered) + 1)
