"""Flow records, traffic classes and per-probe partitions."""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence


class TrafficClass(str, enum.Enum):
    HARMLESS_SSH = "HarmlessSsh"
    BAD_SSH = "BadSsh"
    MISCONFIGURED_IP = "MisconfiguredIp"
    DUPLICATED_IP = "DuplicatedIp"
    PORT_SCAN = "PortScan"
    MITM = "Mitm"

    @property
    def index(self) -> int:
        return CLASSES.index(self)


CLASSES: tuple[TrafficClass, ...] = tuple(TrafficClass)
CLASS_NAMES: tuple[str, ...] = tuple(c.value for c in CLASSES)


class Proto(str, enum.Enum):
    TCP = "tcp"
    UDP = "udp"
    ICMP = "icmp"
    OTHER = "other"


PROTOS: tuple[Proto, ...] = tuple(Proto)
PROBES = ("bottom", "left", "right")

LOAD_TOLERANCE = 0.01


@dataclass(frozen=True)
class FlowRecord:
    probe_id: str
    timestamp_s: float
    duration_s: float
    src: str
    dst: str
    proto: Proto
    s_load: float
    r_load: float
    s_pkts: int
    r_pkts: int
    s_bytes: int
    r_bytes: int
    label: TrafficClass

    def __post_init__(self):
        problem = check_record(self, check_load=False)
        if problem:
            raise ValueError(problem)


def check_record(r: FlowRecord, check_load: bool = True) -> str | None:
    """Return the first invariant the record breaks, or None."""
    if not (math.isfinite(r.timestamp_s) and r.timestamp_s >= 0):
        return "timestamp_s must be a non-negative number"
    if not (math.isfinite(r.duration_s) and r.duration_s > 0):
        return "duration_s must be > 0"
    for name in ("s_load", "r_load"):
        v = getattr(r, name)
        if not (math.isfinite(v) and v >= 0):
            return f"{name} must be >= 0"
    for name in ("s_pkts", "r_pkts", "s_bytes", "r_bytes"):
        if getattr(r, name) < 0:
            return f"{name} must be >= 0"
    if check_load:
        for load, nbytes, side in ((r.s_load, r.s_bytes, "s"), (r.r_load, r.r_bytes, "r")):
            expect = 8.0 * nbytes / r.duration_s
            if abs(load - expect) > LOAD_TOLERANCE * max(expect, load):
                return f"{side}_load {load:g} inconsistent with 8*{side}_bytes/duration = {expect:g}"
    return None


def histogram(records: Sequence[FlowRecord]) -> dict[TrafficClass, int]:
    counts = Counter(r.label for r in records)
    return {c: counts.get(c, 0) for c in CLASSES}


@dataclass(frozen=True)
class DatasetPartition:
    probe_id: str
    records: tuple[FlowRecord, ...]
    class_histogram: dict[TrafficClass, int] = field(default=None, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        hist = histogram(self.records)
        if self.class_histogram is not None and dict(self.class_histogram) != hist:
            raise ValueError("class_histogram inconsistent with records")
        object.__setattr__(self, "class_histogram", hist)

    def __len__(self) -> int:
        return len(self.records)

    def labels(self) -> list[int]:
        return [r.label.index for r in self.records]


def total_variation(p: dict, q: dict) -> float:
    """TV distance between two class histograms (normalised internally)."""
    np_, nq = sum(p.values()), sum(q.values())
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0) / np_ - q.get(k, 0) / nq) for k in keys)
