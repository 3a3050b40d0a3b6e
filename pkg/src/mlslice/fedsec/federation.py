"""Local training, federated rounds and the detection-to-quarantine path."""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..learn.linear import SoftmaxRegression, cross_entropy
from ..orchestrator import Orchestrator, Quarantine, directive_to_dict
from ..telemetry.features import labels_of, records_to_matrix
from ..telemetry.records import CLASSES, DatasetPartition, FlowRecord, TrafficClass
from .params import AgentReport, LayoutMismatch, ModelParams, RoundLog, fedavg, load_into, params_of, softmax_layout

log = logging.getLogger(__name__)

N_CLASSES = len(CLASSES)
DEFAULT_MODEL = {"learning_rate": 0.5, "batch_size": 32, "l2": 1e-4, "decay": 0.0}


def agent_seed(seed: int, agent_id: str) -> int:
    """Per-agent training seed derived from the run seed and the agent id."""
    ss = np.random.SeedSequence([seed, *agent_id.encode("utf-8")])
    return int(ss.generate_state(1, np.uint32)[0])


# -- federated standardisation -----------------------------------------------


@dataclass(frozen=True, eq=False)
class PooledScaler:
    """Z-score statistics assembled from per-agent moments (n, sum, sum of squares)."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_moments(cls, moments: Sequence[tuple[int, np.ndarray, np.ndarray]]) -> "PooledScaler":
        n = sum(m[0] for m in moments)
        s = np.sum([m[1] for m in moments], axis=0)
        q = np.sum([m[2] for m in moments], axis=0)
        mean = s / n
        var = np.maximum(q / n - mean**2, 0.0)
        std = np.sqrt(var)
        return cls(mean, np.where(std > 0, std, 1.0))

    def transform(self, X):
        return (np.asarray(X) - self.mean) / self.std


def moments(X) -> tuple[int, np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    return X.shape[0], X.sum(axis=0), (X**2).sum(axis=0)


# -- agents --------------------------------------------------------------------


def local_train(
    global_params: ModelParams,
    X,
    y,
    epochs: int,
    *,
    agent_id: str,
    seed: int,
    start_epoch: int = 0,
    model_kw: Mapping | None = None,
) -> AgentReport:
    """Train a softmax model from ``global_params`` on one agent's data.

    ``X`` is already standardised. ``start_epoch`` keys the shuffling so an
    agent's epochs continue the sequence across rounds.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError(f"agent {agent_id} has no data")
    n_classes = global_params.tensors().get("intercept", np.empty(0)).shape[0]
    if global_params.layout != softmax_layout(X.shape[1], n_classes):
        raise LayoutMismatch(f"agent {agent_id}: data has {X.shape[1]} features, layout {global_params.layout}")
    model = SoftmaxRegression(n_classes=n_classes, seed=seed, **{**DEFAULT_MODEL, **dict(model_kw or {})})
    load_into(model, global_params)
    model.train_epochs(X, y, epochs, start_epoch)
    proba = model.predict_proba(X)
    return AgentReport(
        agent_id=agent_id,
        params=params_of(model, global_params.version),
        n_samples=int(X.shape[0]),
        train_loss=cross_entropy(proba, y),
        train_accuracy=float(np.mean(np.argmax(proba, axis=1) == y)),
    )


def evaluate_params(params: ModelParams, X, y) -> tuple[float, float]:
    """(accuracy, mean cross-entropy) of a global model on standardised data."""
    t = params.tensors()
    z = np.asarray(X) @ t["coef"] + t["intercept"]
    z = z - z.max(axis=1, keepdims=True)
    proba = np.exp(z)
    proba /= proba.sum(axis=1, keepdims=True)
    y = np.asarray(y, dtype=np.int64)
    return float(np.mean(np.argmax(proba, axis=1) == y)), cross_entropy(proba, y)


def predict_params(params: ModelParams, X) -> np.ndarray:
    t = params.tensors()
    return np.argmax(np.asarray(X) @ t["coef"] + t["intercept"], axis=1)


# -- federation ------------------------------------------------------------------


def holdout_split(partitions: Sequence[DatasetPartition], fraction: float = 0.2, seed: int = 0):
    """Carve a stratified holdout out of every partition.

    Returns the reduced partitions and one pooled holdout partition. Each
    class of each partition contributes ``round(fraction * n_c)`` records.
    """
    rng = np.random.default_rng(seed)
    kept, held = [], []
    for part in partitions:
        labels = np.array(part.labels())
        out = np.zeros(len(labels), dtype=bool)
        for c in range(N_CLASSES):
            idx = np.flatnonzero(labels == c)
            take = int(round(fraction * len(idx)))
            out[rng.permutation(idx)[:take]] = True
        kept.append(DatasetPartition(part.probe_id, [r for r, o in zip(part.records, out) if not o]))
        held.extend(r for r, o in zip(part.records, out) if o)
    return kept, DatasetPartition("holdout", held)


@dataclass
class FederationResult:
    logs: list[RoundLog]
    params: ModelParams
    scaler: PooledScaler
    reports: list[list[AgentReport]] = field(default_factory=list)

    def rounds_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "accuracy", "loss"])
        for r in self.logs:
            w.writerow([r.round, repr(r.global_accuracy), repr(r.global_loss)])
        return buf.getvalue()

    def rounds_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.logs], indent=2)


def run_federation(
    partitions: Sequence[DatasetPartition],
    rounds: int,
    epochs_per_round: int,
    seed: int,
    holdout: DatasetPartition,
    *,
    model_kw: Mapping | None = None,
    n_classes: int = N_CLASSES,
    on_round: Callable[[int, ModelParams], None] | None = None,
) -> FederationResult:
    """Synchronous FedAvg over one agent per partition.

    Agents first share feature moments so all of them (and the holdout)
    use one pooled z-score. Each round the aggregator broadcasts the global
    parameters, every agent trains ``epochs_per_round`` epochs, the reports
    are averaged and the new global model is scored on ``holdout``.
    """
    if rounds < 0 or epochs_per_round < 0:
        raise ValueError("rounds and epochs_per_round must be >= 0")
    if any(len(p) == 0 for p in partitions):
        raise ValueError("every agent needs a non-empty partition")
    raw = [(p.probe_id, records_to_matrix(p.records), labels_of(p.records)) for p in partitions]
    scaler = PooledScaler.from_moments([moments(X) for _, X, _ in raw])
    agents = [(aid, scaler.transform(X), y, agent_seed(seed, aid)) for aid, X, y in raw]
    Xh = scaler.transform(records_to_matrix(holdout.records))
    yh = labels_of(holdout.records)
    d = agents[0][1].shape[1]
    global_params = ModelParams(softmax_layout(d, n_classes), np.zeros(d * n_classes + n_classes), 0)
    logs: list[RoundLog] = []
    history: list[list[AgentReport]] = []
    for r in range(1, rounds + 1):
        reports = [
            local_train(global_params, X, y, epochs_per_round, agent_id=aid, seed=s,
                        start_epoch=(r - 1) * epochs_per_round, model_kw=model_kw)
            for aid, X, y, s in agents
        ]
        global_params = fedavg(reports)
        acc, loss = evaluate_params(global_params, Xh, yh)
        logs.append(RoundLog(r, acc, loss, tuple(sorted(aid for aid, *_ in agents))))
        history.append(reports)
        log.debug("round %d accuracy %.4f loss %.4f", r, acc, loss)
        if on_round is not None:
            on_round(r, global_params)
    return FederationResult(logs, global_params, scaler, history)


def train_centralized(partitions: Sequence[DatasetPartition], epochs: int, seed: int, scaler: PooledScaler | None = None,
                      *, model_kw: Mapping | None = None, n_classes: int = N_CLASSES):
    """Baseline: one softmax model on the pooled partitions."""
    X = np.vstack([records_to_matrix(p.records) for p in partitions])
    y = np.concatenate([labels_of(p.records) for p in partitions])
    scaler = scaler or PooledScaler.from_moments([moments(X)])
    model = SoftmaxRegression(n_classes=n_classes, seed=seed, epochs=epochs, **{**DEFAULT_MODEL, **dict(model_kw or {})})
    model.init_params(X.shape[1]).train_epochs(scaler.transform(X), y, epochs)
    return params_of(model), scaler


# -- detection and actuation -------------------------------------------------------


@dataclass(frozen=True)
class Action:
    slice_id: str
    directive: dict
    attack_ratio: float
    flows: int
    ok: bool
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "slice": self.slice_id,
            "directive": self.directive,
            "attack_ratio": self.attack_ratio,
            "flows": self.flows,
            "ok": self.ok,
            "error": self.error,
        }


def detect_and_act(
    params: ModelParams,
    batch: Sequence[FlowRecord],
    orchestrator: Orchestrator,
    threshold: float,
    scaler: PooledScaler,
) -> list[Action]:
    """Quarantine slices whose monitored traffic looks mostly hostile.

    A flow counts against every Operational, non-quarantined slice that
    monitors its probe. A slice is quarantined when the fraction of its
    flows predicted as anything but HarmlessSsh exceeds ``threshold``.
    Slices that saw no flows are never touched. Orchestrator rejections
    are logged and reported, not raised.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    if not batch:
        return []
    pred = predict_params(params, scaler.transform(records_to_matrix(batch)))
    hostile = pred != TrafficClass.HARMLESS_SSH.index
    flows: dict[str, int] = {}
    attacks: dict[str, int] = {}
    for rec, bad in zip(batch, hostile):
        for sid in orchestrator.slices_monitoring(rec.probe_id):
            if orchestrator.state.slices[sid].quarantined:
                continue
            flows[sid] = flows.get(sid, 0) + 1
            attacks[sid] = attacks.get(sid, 0) + int(bad)
    actions = []
    for sid in sorted(flows):
        ratio = attacks[sid] / flows[sid]
        if ratio <= threshold:
            continue
        directive = directive_to_dict(Quarantine())
        reply = orchestrator.execute({"op": "supervise", "slice": sid, "directive": directive})
        if not reply.ok:
            log.warning("quarantine of %s rejected: %s", sid, reply.error)
        actions.append(Action(sid, directive, ratio, flows[sid], reply.ok, reply.error))
    return actions
