"""Slice domain types and the lifecycle state machine.

All types are frozen; operations return new values and never mutate
their inputs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .marketplace import Marketplace


class SliceError(Exception):
    """Base class for orchestration errors."""


class IllegalTransition(SliceError):
    def __init__(self, state: "SliceState", event: "LifecycleEvent"):
        super().__init__(f"illegal transition: {state.value} --{event.value}-->")
        self.state = state
        self.event = event


class NotDecommissioned(SliceError):
    def __init__(self, slice_id: str, state: "SliceState"):
        super().__init__(f"slice {slice_id!r} is {state.value}; only terminal slices release resources")
        self.slice_id = slice_id
        self.state = state


class ResourceKind(str, enum.Enum):
    COMPUTE = "compute"
    LINK = "link"
    RADIO = "radio"
    IOT = "iot"


class EnergyClass(str, enum.Enum):
    CLEAN = "clean"
    MIXED = "mixed"
    DIRTY = "dirty"

    @property
    def rank(self) -> int:
        return _ENERGY_RANK[self]


# capacities and amounts live on a 1e-9 grid so reserve/release round-trips exactly
QUANTUM_DIGITS = 9


def quantize(x: float) -> float:
    return round(float(x), QUANTUM_DIGITS) + 0.0


_ENERGY_RANK = {EnergyClass.CLEAN: 0, EnergyClass.MIXED: 1, EnergyClass.DIRTY: 2}


class SliceState(str, enum.Enum):
    REQUESTED = "Requested"
    PREPARED = "Prepared"
    COMMISSIONED = "Commissioned"
    OPERATIONAL = "Operational"
    DECOMMISSIONED = "Decommissioned"
    FAILED = "Failed"

    @property
    def terminal(self) -> bool:
        return self in (SliceState.DECOMMISSIONED, SliceState.FAILED)


class LifecycleEvent(str, enum.Enum):
    PREPARATION_DONE = "PreparationDone"
    COMMISSIONING_DONE = "CommissioningDone"
    ACTIVATED = "Activated"
    DECOMMISSION = "Decommission"
    FAULT = "Fault"


_TRANSITIONS = {
    (SliceState.REQUESTED, LifecycleEvent.PREPARATION_DONE): SliceState.PREPARED,
    (SliceState.PREPARED, LifecycleEvent.COMMISSIONING_DONE): SliceState.COMMISSIONED,
    (SliceState.COMMISSIONED, LifecycleEvent.ACTIVATED): SliceState.OPERATIONAL,
    (SliceState.OPERATIONAL, LifecycleEvent.DECOMMISSION): SliceState.DECOMMISSIONED,
}


@dataclass(frozen=True)
class ResourceOffer:
    id: str
    domain_id: str
    kind: ResourceKind
    capacity: float
    unit_cost: float
    energy_class: EnergyClass = EnergyClass.MIXED

    def __post_init__(self):
        if not self.capacity >= 0:
            raise ValueError(f"offer {self.id!r}: capacity must be >= 0, got {self.capacity}")
        if not self.unit_cost >= 0:
            raise ValueError(f"offer {self.id!r}: unit_cost must be >= 0, got {self.unit_cost}")
        object.__setattr__(self, "capacity", quantize(self.capacity))
        object.__setattr__(self, "kind", ResourceKind(self.kind))
        object.__setattr__(self, "energy_class", EnergyClass(self.energy_class))


@dataclass(frozen=True)
class QoS:
    max_latency_ms: float = 50.0
    min_throughput: float = 1.0

    def __post_init__(self):
        if not (self.max_latency_ms > 0 and self.min_throughput > 0):
            raise ValueError("qos fields must be positive")


@dataclass(frozen=True)
class SliceRequest:
    id: str
    demands: tuple[tuple[ResourceKind, float], ...]
    qos: QoS = field(default_factory=QoS)
    tenant: str = "default"

    def __post_init__(self):
        demands = tuple((ResourceKind(k), quantize(a)) for k, a in self.demands)
        if not demands:
            raise ValueError(f"request {self.id!r} has no demands")
        for kind, amount in demands:
            if not amount > 0:
                raise ValueError(f"request {self.id!r}: demand for {kind.value} must be > 0")
        object.__setattr__(self, "demands", demands)


@dataclass(frozen=True)
class Slice:
    id: str
    request_id: str
    state: SliceState = SliceState.REQUESTED
    allocations: tuple[tuple[str, float], ...] = ()
    monitors: tuple[str, ...] = ()
    # picked during preparation, reserved at commissioning
    pending: tuple[tuple[str, float], ...] = ()
    quarantined: bool = False
    policy: str = "MinCost"

    def __post_init__(self):
        for rid, amount in self.allocations:
            if not amount > 0:
                raise ValueError(f"slice {self.id!r}: allocation of {rid!r} must be > 0")

    def allocated(self, resource_id: str) -> float:
        return sum(a for r, a in self.allocations if r == resource_id)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "request_id": self.request_id,
            "state": self.state.value,
            "allocations": [[r, a] for r, a in self.allocations],
            "monitors": list(self.monitors),
            "pending": [[r, a] for r, a in self.pending],
            "quarantined": self.quarantined,
            "policy": self.policy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Slice":
        return cls(
            id=d["id"],
            request_id=d["request_id"],
            state=SliceState(d["state"]),
            allocations=tuple((r, float(a)) for r, a in d["allocations"]),
            monitors=tuple(d["monitors"]),
            pending=tuple((r, float(a)) for r, a in d.get("pending", [])),
            quarantined=bool(d.get("quarantined", False)),
            policy=d.get("policy", "MinCost"),
        )


def advance_lifecycle(slice_: Slice, event: LifecycleEvent | str) -> Slice:
    """Return ``slice_`` moved along the lifecycle edge labelled ``event``.

    ``Fault`` moves any non-terminal slice to ``Failed``. Every other
    pair not on the preparation→decommissioning chain raises
    :class:`IllegalTransition` and leaves the slice untouched.
    """
    event = LifecycleEvent(event)
    if event is LifecycleEvent.FAULT and not slice_.state.terminal:
        return replace(slice_, state=SliceState.FAILED)
    try:
        nxt = _TRANSITIONS[(slice_.state, event)]
    except KeyError:
        raise IllegalTransition(slice_.state, event) from None
    return replace(slice_, state=nxt)


def release_allocations(slice_: Slice, market: "Marketplace") -> tuple[Slice, "Marketplace"]:
    """Give a terminal slice's allocations back to the marketplace.

    Returns the emptied slice and the updated marketplace. Calling it
    again on the emptied slice leaves capacities unchanged.
    """
    if not slice_.state.terminal:
        raise NotDecommissioned(slice_.id, slice_.state)
    market = market.restore(slice_.allocations)
    return replace(slice_, allocations=(), pending=()), market
