"""Slice builder, instantiation manager and supervisor.

The orchestration functions are pure: each takes an
:class:`OrchestratorState` and returns a new one with an entry appended
to its event log. :class:`Orchestrator` is the single-writer loop that
serialises commands from agents and the CLI onto those functions.
"""
from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping

from .core import (
    LifecycleEvent,
    QoS,
    ResourceKind,
    Slice,
    SliceError,
    SliceRequest,
    SliceState,
    advance_lifecycle,
    quantize,
    release_allocations,
)
from .marketplace import (
    Infeasible,
    InsufficientCapacity,
    Marketplace,
    Policy,
    reserve,
    select_resources,
)

log = logging.getLogger(__name__)

DEFAULT_PROBES = ("bottom", "left", "right")


class DuplicateRequest(SliceError):
    def __init__(self, request_id: str):
        super().__init__(f"request id {request_id!r} already used")
        self.request_id = request_id


class UnknownSlice(SliceError):
    def __init__(self, slice_id: str):
        super().__init__(f"unknown slice {slice_id!r}")
        self.slice_id = slice_id


class UnknownProbe(SliceError):
    def __init__(self, probe_id: str):
        super().__init__(f"unknown probe {probe_id!r}")
        self.probe_id = probe_id


class AmountExceedsAllocation(SliceError):
    def __init__(self, kind: ResourceKind, amount: float, held: float):
        super().__init__(f"cannot scale {kind.value} down by {amount:g}: slice holds {held:g}")
        self.kind = kind
        self.amount = amount
        self.held = held


class Quarantined(SliceError):
    def __init__(self, slice_id: str):
        super().__init__(f"slice {slice_id!r} is quarantined")
        self.slice_id = slice_id


# -- supervisor directives ---------------------------------------------------


@dataclass(frozen=True)
class _Scale:
    kind: ResourceKind
    amount: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ResourceKind(self.kind))
        object.__setattr__(self, "amount", quantize(self.amount))
        if not self.amount > 0:
            raise ValueError("scale amount must be > 0")


@dataclass(frozen=True)
class ScaleUp(_Scale):
    pass


@dataclass(frozen=True)
class ScaleDown(_Scale):
    pass


@dataclass(frozen=True)
class Quarantine:
    pass


@dataclass(frozen=True)
class Decommission:
    pass


Directive = ScaleUp | ScaleDown | Quarantine | Decommission


def directive_to_dict(d: Directive) -> dict:
    if isinstance(d, _Scale):
        return {"type": type(d).__name__, "kind": d.kind.value, "amount": d.amount}
    return {"type": type(d).__name__}


def directive_from_dict(d: Mapping[str, Any]) -> Directive:
    kind = d["type"]
    if kind == "ScaleUp":
        return ScaleUp(d["kind"], d["amount"])
    if kind == "ScaleDown":
        return ScaleDown(d["kind"], d["amount"])
    if kind == "Quarantine":
        return Quarantine()
    if kind == "Decommission":
        return Decommission()
    raise ValueError(f"unknown directive {kind!r}")


# -- state ---------------------------------------------------------------------


def request_to_dict(r: SliceRequest) -> dict:
    return {
        "id": r.id,
        "demands": [[k.value, a] for k, a in r.demands],
        "qos": {"max_latency_ms": r.qos.max_latency_ms, "min_throughput": r.qos.min_throughput},
        "tenant": r.tenant,
    }


def request_from_dict(d: Mapping[str, Any]) -> SliceRequest:
    qos = d.get("qos") or {}
    return SliceRequest(
        id=str(d["id"]),
        demands=tuple((k, float(a)) for k, a in d["demands"]),
        qos=QoS(**qos) if qos else QoS(),
        tenant=str(d.get("tenant", "default")),
    )


@dataclass(frozen=True)
class OrchestratorState:
    market: Marketplace
    slices: Mapping[str, Slice] = field(default_factory=dict)
    requests: Mapping[str, SliceRequest] = field(default_factory=dict)
    event_log: tuple[tuple[float, dict], ...] = ()
    clock: float = 0.0
    probes: tuple[str, ...] = DEFAULT_PROBES

    def slice(self, slice_id: str) -> Slice:
        try:
            return self.slices[slice_id]
        except KeyError:
            raise UnknownSlice(slice_id) from None

    def _with(self, record: dict, **changes) -> "OrchestratorState":
        return replace(self, event_log=self.event_log + ((self.clock, record),), **changes)

    def _put(self, s: Slice, record: dict, **changes) -> "OrchestratorState":
        slices = dict(self.slices)
        slices[s.id] = s
        record = {**record, "state": s.state.value}
        return self._with(record, slices=slices, **changes)

    def to_dict(self) -> dict:
        return {
            "clock": self.clock,
            "probes": list(self.probes),
            "market": self.market.to_dict(),
            "requests": {k: request_to_dict(self.requests[k]) for k in sorted(self.requests)},
            "slices": {k: self.slices[k].to_dict() for k in sorted(self.slices)},
            "event_log": [[t, rec] for t, rec in self.event_log],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "OrchestratorState":
        return cls(
            market=Marketplace.from_dict(d["market"]),
            slices={k: Slice.from_dict(v) for k, v in d["slices"].items()},
            requests={k: request_from_dict(v) for k, v in d["requests"].items()},
            event_log=tuple((float(t), rec) for t, rec in d["event_log"]),
            clock=float(d["clock"]),
            probes=tuple(d["probes"]),
        )

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()


def initial_state(market: Marketplace, probes: Iterable[str] = DEFAULT_PROBES) -> OrchestratorState:
    return OrchestratorState(market=market, probes=tuple(probes))


# -- builder / instantiation / supervisor --------------------------------------


def advance_time(state: OrchestratorState, dt: float) -> OrchestratorState:
    if not dt >= 0:
        raise ValueError("time only moves forward")
    state = replace(state, clock=quantize(state.clock + dt))
    return state._with({"op": "advance_time", "dt": dt})


def prepare(state: OrchestratorState, request: SliceRequest, policy: Policy | str = Policy.MIN_COST) -> OrchestratorState:
    """Preparation phase: localise resources for ``request`` without reserving them."""
    policy = Policy(policy)
    if request.id in state.requests:
        raise DuplicateRequest(request.id)
    s = Slice(id=request.id, request_id=request.id, policy=policy.value)
    requests = {**state.requests, request.id: request}
    record = {"op": "prepare", "request": request_to_dict(request), "policy": policy.value}
    try:
        pick = select_resources(state.market, request, policy)
    except Infeasible as exc:
        s = advance_lifecycle(s, LifecycleEvent.FAULT)
        return state._put(s, {**record, "error": str(exc)}, requests=requests)
    s = replace(advance_lifecycle(s, LifecycleEvent.PREPARATION_DONE), pending=tuple(pick))
    return state._put(s, record, requests=requests)


def commission(state: OrchestratorState, slice_id: str) -> OrchestratorState:
    """Reserve the prepared pick; on contention re-select once before failing."""
    s = state.slice(slice_id)
    if s.state is not SliceState.PREPARED:
        raise_illegal(s, LifecycleEvent.COMMISSIONING_DONE)
    record: dict = {"op": "commission", "slice": slice_id}
    pick = s.pending
    try:
        market = reserve(state.market, pick)
    except InsufficientCapacity as first:
        record["retried"] = True
        try:
            pick = tuple(select_resources(state.market, state.requests[s.request_id], s.policy))
            market = reserve(state.market, pick)
        except (Infeasible, InsufficientCapacity) as exc:
            failed = replace(advance_lifecycle(s, LifecycleEvent.FAULT), pending=())
            return state._put(failed, {**record, "error": f"{first}; retry: {exc}"})
    s = replace(advance_lifecycle(s, LifecycleEvent.COMMISSIONING_DONE), allocations=_merge(pick), pending=())
    return state._put(s, record, market=market)


def _merge(picks) -> tuple[tuple[str, float], ...]:
    """One allocation entry per resource, in first-seen order."""
    merged: dict[str, float] = {}
    for rid, amount in picks:
        merged[rid] = quantize(merged.get(rid, 0.0) + amount)
    return tuple(merged.items())


def instantiate(state: OrchestratorState, slice_id: str, probes: Iterable[str]) -> OrchestratorState:
    """Deploy a commissioned slice and attach its monitoring probes."""
    s = state.slice(slice_id)
    probes = tuple(probes)
    if s.state is not SliceState.COMMISSIONED:
        raise_illegal(s, LifecycleEvent.ACTIVATED)
    for p in probes:
        if p not in state.probes:
            raise UnknownProbe(p)
    if not probes:
        log.warning("slice %s instantiated without monitors", slice_id)
    s = replace(advance_lifecycle(s, LifecycleEvent.ACTIVATED), monitors=probes)
    return state._put(s, {"op": "instantiate", "slice": slice_id, "probes": list(probes)})


def supervise(state: OrchestratorState, slice_id: str, directive: Directive) -> OrchestratorState:
    s = state.slice(slice_id)
    if isinstance(directive, Decommission):
        # lifecycle check before touching resources
        s = advance_lifecycle(s, LifecycleEvent.DECOMMISSION)
        s, market = release_allocations(s, state.market)
        return state._put(s, _sup_record(slice_id, directive), market=market)
    if s.state is not SliceState.OPERATIONAL:
        raise SliceError(f"slice {slice_id!r} is {s.state.value}; supervision needs Operational")
    if isinstance(directive, Quarantine):
        if s.quarantined:
            raise Quarantined(slice_id)
        s = replace(s, quarantined=True, monitors=())
        return state._put(s, _sup_record(slice_id, directive))
    if isinstance(directive, ScaleDown):
        return _scale_down(state, s, directive)
    if isinstance(directive, ScaleUp):
        return _scale_up(state, s, directive)
    raise TypeError(f"not a directive: {directive!r}")


def _sup_record(slice_id: str, directive: Directive) -> dict:
    return {"op": "supervise", "slice": slice_id, "directive": directive_to_dict(directive)}


def _policy_key(policy: Policy, market: Marketplace):
    def key(rid: str):
        o = market.offers[rid]
        if policy is Policy.CLEAN_ENERGY_FIRST:
            return (o.energy_class.rank, o.unit_cost, rid)
        if policy is Policy.MAX_RESIDUAL:
            return (-market.available[rid], o.unit_cost, rid)
        return (o.unit_cost, rid)

    return key


def _held(s: Slice, market: Marketplace, kind: ResourceKind) -> list[str]:
    seen = []
    for rid, _ in s.allocations:
        if market.offers[rid].kind is kind and rid not in seen:
            seen.append(rid)
    return seen


def _scale_up(state: OrchestratorState, s: Slice, d: ScaleUp) -> OrchestratorState:
    if s.quarantined:
        raise Quarantined(s.id)
    market = state.market
    policy = Policy(s.policy)
    # extend a resource the slice already holds before opening a new one
    held = sorted(
        (rid for rid in _held(s, market, d.kind) if market.available[rid] >= d.amount),
        key=_policy_key(policy, market),
    )
    if held:
        rid = held[0]
    else:
        try:
            [(rid, _)] = select_resources(market, SliceRequest(f"{s.id}/scale", ((d.kind, d.amount),)), policy)
        except Infeasible as exc:
            raise InsufficientCapacity(f"<{d.kind.value}>", d.amount, d.amount - exc.shortfall) from None
    market = reserve(market, [(rid, d.amount)])
    allocations = list(s.allocations)
    for i, (r, a) in enumerate(allocations):
        if r == rid:
            allocations[i] = (r, quantize(a + d.amount))
            break
    else:
        allocations.append((rid, d.amount))
    s = replace(s, allocations=tuple(allocations))
    return state._put(s, {**_sup_record(s.id, d), "resource": rid}, market=market)


def _scale_down(state: OrchestratorState, s: Slice, d: ScaleDown) -> OrchestratorState:
    market = state.market
    held = _held(s, market, d.kind)
    total = quantize(math.fsum(a for r, a in s.allocations if r in held))
    if d.amount > total:
        raise AmountExceedsAllocation(d.kind, d.amount, total)
    remaining = d.amount
    amounts = dict(s.allocations)
    freed = []
    # give back the least preferred resource first
    for rid in sorted(held, key=_policy_key(Policy(s.policy), market), reverse=True):
        if remaining <= 0:
            break
        take = min(amounts[rid], remaining)
        amounts[rid] = quantize(amounts[rid] - take)
        remaining = quantize(remaining - take)
        freed.append((rid, take))
    allocations = tuple((r, amounts[r]) for r, _ in s.allocations if amounts[r] > 0)
    s = replace(s, allocations=allocations)
    return state._put(s, _sup_record(s.id, d), market=market.restore(freed))


def fault(state: OrchestratorState, slice_id: str, reason: str = "") -> OrchestratorState:
    """Move a live slice to Failed and hand its resources back."""
    s = advance_lifecycle(state.slice(slice_id), LifecycleEvent.FAULT)
    s, market = release_allocations(s, state.market)
    return state._put(s, {"op": "fault", "slice": slice_id, "reason": reason}, market=market)


def reoptimize(state: OrchestratorState) -> OrchestratorState:
    """Provider-wide re-optimisation hook; currently leaves allocations as they are."""
    return state


def raise_illegal(s: Slice, event: LifecycleEvent):
    # advance_lifecycle raises IllegalTransition for every off-chain pair
    advance_lifecycle(s, event)
    raise AssertionError("unreachable")  # pragma: no cover


# -- invariants ----------------------------------------------------------------


def conservation_violations(state: OrchestratorState) -> list[str]:
    """Resources where allocated + available != capacity."""
    allocated: dict[str, list[float]] = {rid: [] for rid in state.market.offers}
    for s in state.slices.values():
        for rid, amount in s.allocations:
            if rid not in allocated:
                return [f"slice {s.id} references unknown resource {rid}"]
            allocated[rid].append(amount)
    bad = []
    for rid, offer in state.market.offers.items():
        total = quantize(math.fsum(allocated[rid]) + state.market.available[rid])
        if total != offer.capacity:
            bad.append(f"{rid}: allocated+available={total} capacity={offer.capacity}")
    return bad


# -- commands & replay ------------------------------------------------------------


def apply_command(state: OrchestratorState, cmd: Mapping[str, Any]) -> OrchestratorState:
    """Dispatch a serialised command (an event-log record or scenario line)."""
    op = cmd["op"]
    if op == "prepare":
        return prepare(state, request_from_dict(cmd["request"]), cmd.get("policy", "MinCost"))
    if op == "commission":
        return commission(state, cmd["slice"])
    if op == "instantiate":
        return instantiate(state, cmd["slice"], cmd.get("probes", ()))
    if op == "supervise":
        return supervise(state, cmd["slice"], directive_from_dict(cmd["directive"]))
    if op == "advance_time":
        return advance_time(state, float(cmd["dt"]))
    if op == "fault":
        return fault(state, cmd["slice"], cmd.get("reason", ""))
    raise ValueError(f"unknown command {op!r}")


def replay(initial: OrchestratorState, event_log: Iterable[tuple[float, dict]]) -> OrchestratorState:
    state = initial
    for _, record in event_log:
        state = apply_command(state, record)
    return state


@dataclass
class Reply:
    ok: bool
    command: Mapping[str, Any]
    error: str | None = None


class Orchestrator:
    """Single-writer event loop over :class:`OrchestratorState`.

    Commands are queued with :meth:`submit` and applied in order by
    :meth:`process`. Rejected commands leave state untouched and are kept
    in :attr:`rejections`.
    """

    def __init__(self, state: OrchestratorState):
        self.state = state
        self._queue: deque[Mapping[str, Any]] = deque()
        self.rejections: list[Reply] = []

    def submit(self, cmd: Mapping[str, Any]) -> None:
        self._queue.append(cmd)

    def process(self) -> list[Reply]:
        replies = []
        while self._queue:
            cmd = self._queue.popleft()
            try:
                self.state = apply_command(self.state, cmd)
            except (SliceError, ValueError) as exc:
                reply = Reply(False, cmd, str(exc))
                self.rejections.append(reply)
                log.info("rejected %s: %s", cmd.get("op"), exc)
            else:
                reply = Reply(True, cmd)
            replies.append(reply)
        return replies

    def execute(self, cmd: Mapping[str, Any]) -> Reply:
        self.submit(cmd)
        return self.process()[-1]

    @property
    def subscriptions(self) -> dict[str, tuple[str, ...]]:
        """Monitor probes of every Operational slice, keyed by slice id."""
        return {
            sid: s.monitors
            for sid, s in sorted(self.state.slices.items())
            if s.monitors and s.state is SliceState.OPERATIONAL
        }

    def slices_monitoring(self, probe_id: str) -> list[str]:
        return sorted(sid for sid, probes in self.subscriptions.items() if probe_id in probes)
