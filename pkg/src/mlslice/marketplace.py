"""Resource catalog, offer selection and atomic reservation."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .core import EnergyClass, ResourceKind, ResourceOffer, SliceError, SliceRequest, quantize

CATALOG_FIELDS = ("id", "domain", "kind", "capacity", "unit_cost", "energy_class")


class ParseError(SliceError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateId(SliceError):
    def __init__(self, resource_id: str):
        super().__init__(f"duplicate resource id {resource_id!r}")
        self.resource_id = resource_id


class Infeasible(SliceError):
    def __init__(self, kind: ResourceKind, shortfall: float):
        super().__init__(f"cannot satisfy {kind.value} demand: shortfall {shortfall:g}")
        self.kind = kind
        self.shortfall = shortfall


class InsufficientCapacity(SliceError):
    def __init__(self, resource_id: str, requested: float = math.nan, available: float = math.nan):
        super().__init__(f"resource {resource_id!r}: requested {requested:g}, available {available:g}")
        self.resource_id = resource_id
        self.requested = requested
        self.available = available


class Policy(str, enum.Enum):
    MIN_COST = "MinCost"
    MAX_RESIDUAL = "MaxResidual"
    CLEAN_ENERGY_FIRST = "CleanEnergyFirst"


@dataclass(frozen=True)
class Marketplace:
    offers: Mapping[str, ResourceOffer] = field(default_factory=dict)
    available: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.offers) != set(self.available):
            raise ValueError("available keys must match offer keys")
        for rid, avail in self.available.items():
            if avail < 0 or avail > self.offers[rid].capacity:
                raise ValueError(f"available[{rid!r}]={avail} outside [0, capacity]")

    @classmethod
    def from_offers(cls, offers: Iterable[ResourceOffer]) -> "Marketplace":
        catalog: dict[str, ResourceOffer] = {}
        for offer in offers:
            if offer.id in catalog:
                raise DuplicateId(offer.id)
            catalog[offer.id] = offer
        return cls(catalog, {rid: o.capacity for rid, o in catalog.items()})

    def of_kind(self, kind: ResourceKind) -> list[ResourceOffer]:
        return sorted((o for o in self.offers.values() if o.kind is kind), key=lambda o: o.id)

    def restore(self, picks: Iterable[tuple[str, float]]) -> "Marketplace":
        avail = dict(self.available)
        for rid, amount in picks:
            avail[rid] = min(quantize(avail[rid] + amount), self.offers[rid].capacity)
        return Marketplace(self.offers, avail)

    def to_dict(self) -> dict:
        return {
            "offers": [
                {
                    "id": o.id,
                    "domain": o.domain_id,
                    "kind": o.kind.value,
                    "capacity": o.capacity,
                    "unit_cost": o.unit_cost,
                    "energy_class": o.energy_class.value,
                }
                for o in sorted(self.offers.values(), key=lambda o: o.id)
            ],
            "available": {rid: self.available[rid] for rid in sorted(self.available)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Marketplace":
        offers = {o["id"]: _offer_from_fields(o) for o in d["offers"]}
        return cls(offers, {rid: quantize(v) for rid, v in d["available"].items()})


def _offer_from_fields(row: Mapping[str, str]) -> ResourceOffer:
    return ResourceOffer(
        id=str(row["id"]).strip(),
        domain_id=str(row["domain"]).strip(),
        kind=ResourceKind(str(row["kind"]).strip().lower()),
        capacity=float(row["capacity"]),
        unit_cost=float(row["unit_cost"]),
        energy_class=EnergyClass(str(row.get("energy_class") or "mixed").strip().lower()),
    )


def parse_catalog(text: str) -> Marketplace:
    """Parse catalog CSV text (header row plus one offer per line)."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return Marketplace()
    missing = [f for f in CATALOG_FIELDS if f not in reader.fieldnames]
    if missing:
        raise ParseError(1, f"header missing columns {missing}")
    offers: dict[str, ResourceOffer] = {}
    for row in reader:
        line = reader.line_num
        if not any((v or "").strip() for v in row.values()):
            continue
        try:
            offer = _offer_from_fields(row)
        except (ValueError, TypeError) as exc:
            raise ParseError(line, str(exc)) from None
        if offer.id in offers:
            raise DuplicateId(offer.id)
        offers[offer.id] = offer
    return Marketplace(offers, {rid: o.capacity for rid, o in offers.items()})


def load_catalog(source: str | Path) -> Marketplace:
    return parse_catalog(Path(source).read_text(encoding="utf-8"))


def _objective(policy: Policy, offers, amounts, residual) -> tuple:
    cost = math.fsum(a * o.unit_cost for o, a in zip(offers, amounts))
    ids = tuple(o.id for o in offers)
    if policy is Policy.MIN_COST:
        return (cost, ids)
    if policy is Policy.CLEAN_ENERGY_FIRST:
        return (sum(o.energy_class.rank for o in offers), cost, ids)
    # MaxResidual: largest worst-case leftover on the touched offers
    return (-min(residual.values()), cost, ids)


def _assign_kind(market: Marketplace, kind: ResourceKind, amounts: list[float], policy: Policy):
    """Exact search over one-offer-per-line assignments for a single kind."""
    candidates = [o for o in market.of_kind(kind) if market.available[o.id] > 0]
    best: tuple | None = None
    best_pick: list[ResourceOffer] | None = None
    load: dict[str, float] = {}
    chosen: list[ResourceOffer] = []
    partial_cost = [0.0]

    def dfs(i: int):
        nonlocal best, best_pick
        if policy is Policy.MIN_COST and best is not None and partial_cost[0] > best[0]:
            return
        if i == len(amounts):
            residual = {rid: market.available[rid] - used for rid, used in load.items()}
            key = _objective(policy, chosen, amounts, residual)
            if best is None or key < best:
                best, best_pick = key, list(chosen)
            return
        for offer in candidates:
            used = load.get(offer.id, 0.0) + amounts[i]
            if used > market.available[offer.id]:
                continue
            prev = load.get(offer.id)
            load[offer.id] = used
            chosen.append(offer)
            partial_cost[0] += amounts[i] * offer.unit_cost
            dfs(i + 1)
            partial_cost[0] -= amounts[i] * offer.unit_cost
            chosen.pop()
            if prev is None:
                del load[offer.id]
            else:
                load[offer.id] = prev

    dfs(0)
    if best_pick is None:
        raise Infeasible(kind, _min_overflow(market, kind, amounts))
    return best_pick


def _min_overflow(market: Marketplace, kind: ResourceKind, amounts: list[float]) -> float:
    offers = market.of_kind(kind)
    if not offers:
        return math.fsum(amounts)
    best = math.inf

    def dfs(i: int, load: dict[str, float]):
        nonlocal best
        if i == len(amounts):
            over = math.fsum(max(0.0, v - market.available[r]) for r, v in load.items())
            best = min(best, over)
            return
        for o in offers:
            load[o.id] = load.get(o.id, 0.0) + amounts[i]
            dfs(i + 1, load)
            load[o.id] -= amounts[i]

    dfs(0, {})
    return best


def select_resources(
    market: Marketplace, request: SliceRequest, policy: Policy | str = Policy.MIN_COST
) -> list[tuple[str, float]]:
    """Pick one offer per demand line.

    Demand lines of different kinds never compete (each offer has one
    kind), so each kind is solved exactly on its own. Ties fall to the
    lexicographically smallest sequence of resource ids.
    """
    policy = Policy(policy)
    by_kind: dict[ResourceKind, list[int]] = {}
    for i, (kind, _) in enumerate(request.demands):
        by_kind.setdefault(kind, []).append(i)
    picks: list[tuple[str, float] | None] = [None] * len(request.demands)
    for kind, idx in by_kind.items():
        amounts = [request.demands[i][1] for i in idx]
        for i, offer in zip(idx, _assign_kind(market, kind, amounts, policy)):
            picks[i] = (offer.id, request.demands[i][1])
    return [p for p in picks if p is not None]


def reserve(market: Marketplace, picks: Iterable[tuple[str, float]]) -> Marketplace:
    """Apply all picks or none."""
    avail = dict(market.available)
    for rid, amount in picks:
        if rid not in avail:
            raise InsufficientCapacity(rid, amount, 0.0)
        if amount > avail[rid]:
            raise InsufficientCapacity(rid, amount, avail[rid])
        avail[rid] = quantize(avail[rid] - amount)
    return Marketplace(market.offers, avail)
