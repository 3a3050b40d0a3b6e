import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlslice.core import SliceRequest, SliceState
from mlslice.fedsec import (
    AgentReport,
    EmptyReportSet,
    LayoutMismatch,
    ModelParams,
    PooledScaler,
    agent_seed,
    detect_and_act,
    fedavg,
    holdout_split,
    local_train,
    moments,
    params_of,
    run_federation,
    softmax_layout,
)
from mlslice.learn import SoftmaxRegression
from mlslice.orchestrator import Orchestrator, commission, initial_state, instantiate, prepare
from mlslice.telemetry import TrafficClass, generate_synthetic, load_spec, single_class_spec
from mlslice.telemetry.features import labels_of, records_to_matrix


def report(agent, values, n, version=0, layout=None):
    values = np.asarray(values, dtype=float)
    layout = layout or (("w", (values.size,)),)
    return AgentReport(agent, ModelParams(layout, values, version), n, 0.0, 1.0)


# ---- fedavg -----------------------------------------------------------------------

def test_fedavg_single_report():
    r = report("a", [1.5, -2.0, 3.25], 7, version=4)
    out = fedavg([r])
    assert np.array_equal(out.values, r.params.values) and out.version == 5


def test_fedavg_symmetric_pair_cancels():
    v = np.random.default_rng(0).normal(size=20)
    out = fedavg([report("a", v, 5), report("b", -v, 5)])
    assert np.array_equal(out.values, np.zeros(20))


def test_fedavg_hand_example():
    out = fedavg([report("a", [3.0], 1), report("b", [0.0], 2), report("c", [1.0], 3)])
    brute = (1 * 3.0 + 2 * 0.0 + 3 * 1.0) / 6
    assert out.values[0] == pytest.approx(brute, abs=1e-15) and brute == 1.0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(1, 300), st.integers(0, 2**32 - 1))
def test_fedavg_matches_brute_force_and_is_order_free(m, d, seed):
    rng = np.random.default_rng(seed)
    reps = [report(f"agent{i}", rng.normal(size=d), int(rng.integers(1, 1000)), int(rng.integers(0, 9))) for i in range(m)]
    out = fedavg(reps)
    total = sum(r.n_samples for r in reps)
    brute = [sum(r.n_samples * float(r.params.values[j]) for r in reps) / total for j in range(d)]
    assert np.max(np.abs(out.values - brute)) <= 1e-12
    shuffled = fedavg([reps[i] for i in rng.permutation(m)])
    assert shuffled.values.tobytes() == out.values.tobytes()
    assert out.version == max(r.params.version for r in reps) + 1


def test_fedavg_errors():
    with pytest.raises(EmptyReportSet):
        fedavg([])
    with pytest.raises(LayoutMismatch):
        fedavg([report("a", [1.0, 2.0], 1), report("b", [1.0, 2.0], 1, layout=(("v", (2,)),))])
    with pytest.raises(LayoutMismatch):
        ModelParams((("w", (2, 2)),), np.zeros(3))
    with pytest.raises(ValueError):
        report("a", [1.0], 0)


def test_params_checkpoint_round_trip(tmp_path):
    p = ModelParams(softmax_layout(2, 3), np.arange(9) / 7.0, 3)
    p.save(tmp_path / "ckpt.json")
    assert ModelParams.load(tmp_path / "ckpt.json") == p
    assert p.tensors()["coef"].shape == (2, 3)


# ---- local training ---------------------------------------------------------------

@pytest.fixture(scope="module")
def probe_data():
    [part] = generate_synthetic(3, n_per_probe=400)[:1]
    X = records_to_matrix(part.records)
    scaler = PooledScaler.from_moments([moments(X)])
    return scaler.transform(X), labels_of(part.records)


def zeros(d=11, c=6):
    return ModelParams(softmax_layout(d, c), np.zeros(d * c + c))


def test_local_train_zero_epochs_is_identity(probe_data):
    X, y = probe_data
    g = ModelParams(softmax_layout(11, 6), np.random.default_rng(1).normal(size=72), 2)
    r = local_train(g, X, y, 0, agent_id="bottom", seed=1)
    assert r.params == g and r.n_samples == len(y)
    assert r.train_loss > 0 and 0 <= r.train_accuracy <= 1


def test_local_train_deterministic(probe_data):
    X, y = probe_data
    a = local_train(zeros(), X, y, 2, agent_id="x", seed=4)
    b = local_train(zeros(), X, y, 2, agent_id="x", seed=4)
    assert a == b


def test_local_train_reduces_loss(probe_data):
    X, y = probe_data
    for seed in range(3):
        before = local_train(zeros(), X, y, 0, agent_id="x", seed=seed).train_loss
        after = local_train(zeros(), X, y, 5, agent_id="x", seed=seed).train_loss
        assert after <= before


def test_local_train_layout_mismatch(probe_data):
    X, y = probe_data
    with pytest.raises(LayoutMismatch):
        local_train(zeros(d=5), X, y, 1, agent_id="x", seed=0)


# ---- federation -------------------------------------------------------------------

def test_zero_rounds_empty_log():
    parts, hold = holdout_split(generate_synthetic(0, n_per_probe=200), 0.2, 0)
    assert run_federation(parts, 0, 1, 0, hold).logs == []


def test_holdout_disjoint_and_stratified():
    parts = generate_synthetic(1, n_per_probe=300)
    kept, hold = holdout_split(parts, 0.2, 1)
    ids = {id(r) for p in kept for r in p.records}
    assert not ids & {id(r) for r in hold.records}
    assert sum(map(len, kept)) + len(hold) == 900
    for p, k in zip(parts, kept):
        for c, n in p.class_histogram.items():
            assert n - k.class_histogram[c] == round(0.2 * n)


def test_single_agent_equals_centralised():
    [part] = generate_synthetic(6, n_per_probe=300)[:1]
    seen = {}
    res = run_federation([part], 4, 2, 9, part, on_round=lambda r, p: seen.__setitem__(r, p))
    Xs = res.scaler.transform(records_to_matrix(part.records))
    y = labels_of(part.records)
    for r in (1, 4):
        central = SoftmaxRegression(n_classes=6, epochs=2 * r, seed=agent_seed(9, part.probe_id)).fit(Xs, y)
        assert params_of(central).values.tobytes() == seen[r].values.tobytes()
    assert [log.round for log in res.logs] == [1, 2, 3, 4]


def test_federation_deterministic_and_logged():
    parts, hold = holdout_split(generate_synthetic(2, n_per_probe=300), 0.2, 2)
    a = run_federation(parts, 3, 1, 2, hold)
    b = run_federation(parts, 3, 1, 2, hold)
    assert a.rounds_csv() == b.rounds_csv()
    assert a.rounds_csv().splitlines()[0] == "round,accuracy,loss"
    assert a.params.version == 3
    assert a.logs[0].participating == ("bottom", "left", "right")


# ---- detection ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def trained():
    parts, hold = holdout_split(generate_synthetic(0), 0.2, 0)
    res = run_federation(parts, 20, 1, 0, hold)
    return res.params, res.scaler


def orchestrator_with(market, slices):
    st = initial_state(market)
    for sid, probes in slices.items():
        st = prepare(st, SliceRequest(sid, (("link", 1.0),)))
        st = instantiate(commission(st, sid), sid, probes)
    return Orchestrator(st)


def flows(label, probe, n, seed=0):
    spec = single_class_spec(label, load_spec()).with_probes({probe: {TrafficClass(label).value: 1.0}})
    return list(generate_synthetic(seed, spec, n_per_probe=n)[0].records)


def test_harmless_batch_no_actions(small_market, trained):
    orch = orchestrator_with(small_market, {"a": ("bottom",)})
    assert detect_and_act(trained[0], flows("HarmlessSsh", "bottom", 50), orch, 0.5, trained[1]) == []


def test_portscan_batch_quarantines_only_target(small_market, trained):
    params, scaler = trained
    orch = orchestrator_with(small_market, {"target": ("right",), "clean": ("bottom",), "idle": ("left",)})
    batch = flows("PortScan", "right", 60) + flows("HarmlessSsh", "bottom", 60, seed=1)
    actions = detect_and_act(params, batch, orch, 0.5, scaler)
    assert [(a.slice_id, a.directive["type"], a.ok) for a in actions] == [("target", "Quarantine", True)]
    assert orch.state.slices["target"].quarantined
    assert orch.state.event_log[-1][1]["directive"] == {"type": "Quarantine"}
    # already quarantined slices are skipped on the next batch
    assert detect_and_act(params, batch, orch, 0.5, scaler) == []


def test_threshold_one_never_acts(small_market, trained):
    params, scaler = trained
    orch = orchestrator_with(small_market, {"t": ("right",)})
    assert detect_and_act(params, flows("PortScan", "right", 40), orch, 1.0, scaler) == []
    assert orch.state.slices["t"].state is SliceState.OPERATIONAL


def test_bad_threshold(small_market, trained):
    with pytest.raises(ValueError):
        detect_and_act(trained[0], flows("PortScan", "right", 5), Orchestrator(initial_state(small_market)), 1.5, trained[1])
