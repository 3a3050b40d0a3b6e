"""Random command sequences for orchestrator property checks."""
import random

from mlslice.core import ResourceOffer, SliceState
from mlslice.marketplace import Marketplace
from mlslice.orchestrator import (
    Orchestrator,
    OrchestratorState,
    conservation_violations,
    initial_state,
    replay,
)

KINDS = ["compute", "link", "radio"]
DIRECTIVES = ["ScaleUp", "ScaleDown", "Quarantine", "Decommission"]
LEGAL_NEXT = {
    SliceState.REQUESTED: {SliceState.PREPARED, SliceState.FAILED},
    SliceState.PREPARED: {SliceState.COMMISSIONED, SliceState.FAILED},
    SliceState.COMMISSIONED: {SliceState.OPERATIONAL, SliceState.FAILED},
    SliceState.OPERATIONAL: {SliceState.DECOMMISSIONED, SliceState.FAILED},
}


def random_market(rng: random.Random) -> Marketplace:
    offers = []
    for i in range(rng.randint(2, 6)):
        offers.append(
            ResourceOffer(
                f"o{i}",
                f"d{rng.randint(0, 2)}",
                rng.choice(KINDS),
                rng.choice([4.0, 6.5, 10.0, 12.25]),
                rng.choice([0.5, 1.0, 2.0, 3.0]),
                rng.choice(["clean", "mixed", "dirty"]),
            )
        )
    return Marketplace.from_offers(offers)


def random_command(rng: random.Random, state: OrchestratorState, n_requests: int) -> dict:
    ids = sorted(state.slices)
    roll = rng.random()
    if roll < 0.25 or not ids:
        demands = [[rng.choice(KINDS), rng.choice([0.5, 1.0, 2.0, 3.5])] for _ in range(rng.randint(1, 3))]
        rid = f"s{rng.randint(0, n_requests)}"
        return {"op": "prepare", "request": {"id": rid, "demands": demands},
                "policy": rng.choice(["MinCost", "MaxResidual", "CleanEnergyFirst"])}
    sid = rng.choice(ids)
    if roll < 0.40:
        return {"op": "commission", "slice": sid}
    if roll < 0.55:
        probes = rng.sample(["bottom", "left", "right", "nowhere"], rng.randint(0, 2))
        return {"op": "instantiate", "slice": sid, "probes": probes}
    if roll < 0.62:
        return {"op": "advance_time", "dt": rng.choice([0.0, 0.5, 1.0])}
    if roll < 0.66:
        return {"op": "fault", "slice": sid}
    kind = rng.choice(DIRECTIVES)
    d = {"type": kind}
    if kind.startswith("Scale"):
        d.update(kind=rng.choice(KINDS), amount=rng.choice([0.25, 0.5, 1.0, 2.0]))
    return {"op": "supervise", "slice": sid, "directive": d}


def run_sequence(seed: int, length: int = 30) -> tuple[OrchestratorState, OrchestratorState, list[str]]:
    """Drive one random sequence; return (initial, final, problems)."""
    rng = random.Random(seed)
    init = initial_state(random_market(rng))
    orch = Orchestrator(init)
    problems = []
    for _ in range(length):
        before = orch.state
        reply = orch.execute(random_command(rng, before, 6))
        after = orch.state
        if not reply.ok:
            if after is not before:
                problems.append(f"rejected command mutated state: {reply.command}")
            continue
        for sid, s in after.slices.items():
            old = before.slices.get(sid)
            if old is not None and old.state != s.state and s.state not in LEGAL_NEXT.get(old.state, set()):
                problems.append(f"{sid}: {old.state.value} -> {s.state.value}")
        problems.extend(conservation_violations(after))
        times = [t for t, _ in after.event_log]
        if times != sorted(times):
            problems.append("event log timestamps not monotone")
    if replay(init, orch.state.event_log).to_bytes() != orch.state.to_bytes():
        problems.append("replay mismatch")
    return init, orch.state, problems
