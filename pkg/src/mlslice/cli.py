"""Command-line entry point.

Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.
Log verbosity comes from ``MLSLICE_LOG_LEVEL`` (default WARNING).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import traceback
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .analytics import elbow_select, importance_frequency, pca, top_loadings
from .core import SliceError, SliceRequest, SliceState
from .fedsec import detect_and_act, holdout_split, run_federation
from .learn import NOT_IMPLEMENTED, EvalConfig, evaluate
from .learn.registry import HYPERPARAMS_VERSION
from .marketplace import load_catalog, parse_catalog
from .orchestrator import (
    Decommission,
    Orchestrator,
    OrchestratorState,
    UnknownSlice,
    directive_to_dict,
    initial_state,
    request_to_dict,
)
from .telemetry import (
    NUMERIC_FEATURES,
    DatasetPartition,
    TrafficClass,
    export_flow_csv,
    featurize,
    generate_synthetic,
    import_flow_csv,
    labels_of,
    load_column_map,
    load_spec,
    records_to_matrix,
)
from .telemetry.synthetic import generate_probe

log = logging.getLogger("mlslice")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
LOG_ENV = "MLSLICE_LOG_LEVEL"


class DataError(Exception):
    """Bad input data or configuration (exit code 2)."""


class UsageError(Exception):
    """Bad command-line usage (exit code 1)."""


def stage_seed(seed: int, stage: str) -> int:
    """Seed for one pipeline stage, keyed on the stage name."""
    ss = np.random.SeedSequence([int(seed), *stage.encode("utf-8")])
    return int(ss.generate_state(1, np.uint32)[0])


def _data_text(name: str) -> str:
    return resources.files("mlslice.data").joinpath(name).read_text(encoding="utf-8")


# -- experiment plan ---------------------------------------------------------------


@dataclass
class ExperimentPlan:
    seed: int
    generator: str | None = None
    n_per_probe: int = 1000
    catalog: str | None = None
    scenario: str | None = None
    dataset: str | None = None
    column_map: str | None = None
    analytics: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)
    federation: dict = field(default_factory=dict)
    output: str | None = None

    @classmethod
    def load(cls, path: str | Path | None, overrides: dict | None = None) -> "ExperimentPlan":
        """Read a plan (``None`` = shipped default) and check referenced files exist.

        Relative paths inside a plan file resolve against the plan's directory.
        """
        if path is None:
            raw, base = json.loads(_data_text("plan_default.json")), Path.cwd()
        else:
            p = Path(path)
            if not p.is_file():
                raise DataError(f"plan file not found: {p}")
            try:
                raw = json.loads(p.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise DataError(f"plan {p} is not valid JSON: {exc}") from None
            base = p.parent
        for k, v in (overrides or {}).items():
            if v is not None:
                raw[k] = v
        if raw.get("seed") is None:
            raise DataError("plan must set a seed")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown plan keys: {sorted(unknown)}")
        plan = cls(**raw)
        plan.seed = int(plan.seed)
        for key in ("generator", "catalog", "scenario", "dataset", "column_map"):
            ref = getattr(plan, key)
            if ref is None:
                continue
            rp = Path(ref)
            if not rp.is_absolute() and not (overrides or {}).get(key):
                rp = base / rp
            if not rp.is_file():
                raise DataError(f"{key} file not found: {rp}")
            setattr(plan, key, str(rp))
        if plan.column_map and not plan.dataset:
            raise DataError("column_map given without a dataset")
        return plan

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# -- experiment stages -------------------------------------------------------------


def _write(out: Path, name: str, text: str, written: list[str]) -> None:
    (out / name).write_text(text, encoding="utf-8")
    written.append(name)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_partitions(plan: ExperimentPlan) -> list[DatasetPartition]:
    if plan.dataset:
        cfg = load_column_map(plan.column_map) if plan.column_map else {"columns": None}
        part, rejects = import_flow_csv(
            plan.dataset,
            cfg.get("columns"),
            labels=cfg.get("labels"),
            check_load=cfg.get("check_load", True),
        )
        if rejects:
            log.warning("%d rows rejected from %s", len(rejects), plan.dataset)
        groups: dict[str, list] = {}
        for r in part.records:
            groups.setdefault(r.probe_id, []).append(r)
        return [DatasetPartition(pid, recs) for pid, recs in sorted(groups.items())]
    spec = load_spec(plan.generator)
    return generate_synthetic(stage_seed(plan.seed, "generate"), spec, plan.n_per_probe)


def _stage_elbow(plan, parts, out, written):
    cfg = plan.analytics
    lo, hi = cfg.get("k_range", [1, 15])
    mode = cfg.get("elbow_mode", "pooled")
    seed = stage_seed(plan.seed, "elbow")
    kw = {"n_init": cfg.get("n_init", 10), "log_wcss": cfg.get("log_wcss", True)}
    if mode == "pooled":
        sets = {"pooled": featurize([r for p in parts for r in p.records]).matrix}
    elif mode == "per_dataset":
        sets = {p.probe_id: featurize(p.records).matrix for p in parts}
    else:
        raise DataError(f"unknown elbow_mode {mode!r}")
    lines = ["dataset,k,wcss,chosen"]
    chosen = {}
    for name, X in sets.items():
        r = elbow_select(X, range(lo, hi + 1), seed=seed, **kw)
        chosen[name] = r.chosen_k
        lines += [f"{name},{k},{w!r},{int(k == r.chosen_k)}" for k, w in zip(r.ks, r.wcss)]
    _write(out, "wcss_curve.csv", "\n".join(lines) + "\n", written)
    return chosen


def _stage_importance(plan, parts, out, written):
    m = plan.analytics.get("n_components", 3)
    per = {}
    for p in parts:
        X = featurize(p.records).matrix[:, : len(NUMERIC_FEATURES)]
        per[p.probe_id] = top_loadings(pca(X), m, NUMERIC_FEATURES)
    rep = importance_frequency(per, NUMERIC_FEATURES)
    _write(out, "importance.json", rep.to_json() + "\n", written)
    _write(out, "importance_frequency.csv", rep.to_csv(), written)
    return rep


def _stage_eval(plan, parts, out, written):
    cfg = plan.eval
    algos = cfg.get("algorithms", ["DecisionTree", "RandomForest", "ExtraTrees", "Knn", "RidgeClassifier", "Qda"])
    hps = cfg.get("hyperparams", {})
    conf = EvalConfig(cfg.get("n_folds", 10), stage_seed(plan.seed, "eval"), cfg.get("stratified", True))
    summary = {}
    for p in parts:
        X, y = records_to_matrix(p.records), labels_of(p.records)
        reports = {a: evaluate(a, hps.get(a), X, y, conf, n_classes=len(TrafficClass)).to_dict() for a in algos}
        doc = {
            "probe": p.probe_id,
            "n_samples": len(p),
            "hyperparams_version": HYPERPARAMS_VERSION,
            "reports": reports,
            "not_implemented": list(NOT_IMPLEMENTED),
        }
        _write(out, f"eval_{p.probe_id}.json", json.dumps(doc, indent=2, sort_keys=True) + "\n", written)
        summary[p.probe_id] = {a: r["mean_accuracy"] for a, r in reports.items()}
    return summary


def _stage_federation(plan, parts, out, written):
    cfg = plan.federation
    seed = stage_seed(plan.seed, "federation")
    train, hold = holdout_split(parts, cfg.get("holdout_fraction", 0.2), seed)
    res = run_federation(train, cfg.get("rounds", 50), cfg.get("epochs_per_round", 1), seed, hold,
                         model_kw=cfg.get("model"))
    _write(out, "federation_rounds.csv", res.rounds_csv(), written)
    _write(out, "federation_rounds.json", res.rounds_json() + "\n", written)
    _write(out, "global_model.json", json.dumps(res.params.to_dict()) + "\n", written)
    return res


def _read_scenario(path: str | None) -> list[dict]:
    text = Path(path).read_text(encoding="utf-8") if path else _data_text("scenario_default.jsonl")
    cmds = []
    for i, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            cmds.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise DataError(f"scenario line {i}: {exc}") from None
    return cmds


def run_scenario(commands, orch: Orchestrator, fed, threshold: float, seed: int, spec=None) -> list[dict]:
    """Drive the orchestrator through a scenario and run detection.

    Besides orchestrator commands a scenario has ``traffic`` lines, which
    synthesise flows of one class at one probe into the pending batch,
    and ``detect`` lines, which score the pending batch and act on it.
    """
    spec = spec or load_spec()
    batch = []
    out = []
    for i, cmd in enumerate(commands):
        op = cmd.get("op")
        if op == "traffic":
            probe, cls = cmd["probe"], TrafficClass(cmd["class"])
            one = spec.with_probes({probe: {cls.value: 1.0}})
            batch += generate_probe(one, probe, int(cmd.get("n", 100)), stage_seed(seed, f"traffic-{i}")).records
        elif op == "detect":
            actions = detect_and_act(fed.params, batch, orch, float(cmd.get("threshold", threshold)), fed.scaler)
            out += [{"step": i, "clock": orch.state.clock, **a.to_dict()} for a in actions]
            batch = []
        else:
            reply = orch.execute(cmd)
            if not reply.ok:
                log.warning("scenario step %d rejected: %s", i, reply.error)
    return out


def _stage_detect(plan, fed, out, written):
    market = load_catalog(plan.catalog) if plan.catalog else parse_catalog(_data_text("catalog_default.csv"))
    orch = Orchestrator(initial_state(market))
    spec = load_spec(plan.generator)
    actions = run_scenario(_read_scenario(plan.scenario), orch, fed, plan.federation.get("threshold", 0.5),
                           stage_seed(plan.seed, "detect"), spec)
    _write(out, "actions.jsonl", "".join(json.dumps(a, sort_keys=True) + "\n" for a in actions), written)
    _write(out, "orchestrator_state.json", orch.state.to_bytes().decode("utf-8") + "\n", written)
    return actions


def _write_manifest(out: Path, plan: ExperimentPlan | None, stages: dict, written: list[str], error: dict | None):
    manifest = {
        "created": datetime.now(timezone.utc).isoformat(),
        "plan": plan.to_dict() if plan else None,
        "seed": plan.seed if plan else None,
        "stage_seeds": {s: stage_seed(plan.seed, s) for s in ("generate", "elbow", "eval", "federation", "detect")}
        if plan else {},
        "versions": {
            "mlslice": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "stages": stages,
        "files": {name: _sha256(out / name) for name in sorted(set(written))},
        "error": error,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_run_experiment(args) -> int:
    overrides = {"seed": args.seed, "catalog": args.catalog, "dataset": args.dataset, "column_map": args.column_map}
    out = Path(args.out) if args.out else None
    plan = None
    stages: dict[str, str] = {}
    written: list[str] = []
    try:
        plan = ExperimentPlan.load(args.plan, overrides)
    except DataError as exc:
        if out:
            out.mkdir(parents=True, exist_ok=True)
            _write_manifest(out, None, {"plan": "failed"}, [], {"stage": "plan", "message": str(exc)})
        return _fail(EXIT_DATA, "plan", exc)
    out = out or Path(plan.output or "results")
    out.mkdir(parents=True, exist_ok=True)
    pipeline: list[tuple[str, Callable[[], Any]]] = []
    ctx: dict[str, Any] = {}
    pipeline.append(("generate", lambda: ctx.__setitem__("parts", _load_partitions(plan))))
    pipeline.append(("elbow", lambda: _stage_elbow(plan, ctx["parts"], out, written)))
    pipeline.append(("importance", lambda: _stage_importance(plan, ctx["parts"], out, written)))
    pipeline.append(("evaluate", lambda: _stage_eval(plan, ctx["parts"], out, written)))
    pipeline.append(("federation", lambda: ctx.__setitem__("fed", _stage_federation(plan, ctx["parts"], out, written))))
    pipeline.append(("detect", lambda: _stage_detect(plan, ctx["fed"], out, written)))
    for name, _ in pipeline:
        stages[name] = "pending"
    for name, fn in pipeline:
        log.info("stage %s", name)
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - every failure is reported in the manifest
            stages[name] = "failed"
            code = EXIT_DATA if isinstance(exc, (DataError, SliceError, ValueError, KeyError, OSError)) else EXIT_INTERNAL
            err = {"stage": name, "type": type(exc).__name__, "message": str(exc)}
            _write_manifest(out, plan, stages, written, err)
            if code == EXIT_INTERNAL:
                log.debug("%s", traceback.format_exc())
            return _fail(code, name, exc)
        stages[name] = "ok"
    _write_manifest(out, plan, stages, written, None)
    print(json.dumps({"ok": True, "out": str(out), "files": sorted(set(written)) + ["manifest.json"]}))
    return EXIT_OK


def _fail(code: int, stage: str, exc: BaseException) -> int:
    print(json.dumps({"ok": False, "exit_code": code, "stage": stage, "error": type(exc).__name__, "message": str(exc)}),
          file=sys.stderr)
    return code


# -- verify / report -----------------------------------------------------------------


def cmd_verify(args) -> int:
    out = Path(args.dir)
    mpath = out / "manifest.json"
    if not mpath.is_file():
        return _fail(EXIT_DATA, "verify", DataError(f"no manifest.json in {out}"))
    manifest = json.loads(mpath.read_text(encoding="utf-8"))
    bad = []
    for name, digest in manifest["files"].items():
        p = out / name
        if not p.is_file():
            bad.append(f"{name}: missing")
        elif _sha256(p) != digest:
            bad.append(f"{name}: hash mismatch")
    for line in bad:
        print(line)
    if bad:
        return EXIT_DATA
    print(f"{len(manifest['files'])} files verified")
    return EXIT_OK


def _table(rows, headers) -> list[str]:
    widths = [max(len(str(x)) for x in col) for col in zip(headers, *rows)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return [fmt.format(*headers), fmt.format(*("-" * w for w in widths))] + [fmt.format(*map(str, r)) for r in rows]


def render_report(out: Path) -> tuple[list[str], list[str]]:
    """Summary lines and the list of artifacts that were absent."""
    lines: list[str] = [f"Results in {out}", ""]
    missing: list[str] = []

    p = out / "wcss_curve.csv"
    lines.append("## Elbow (k-means)")
    if p.is_file():
        rows = [r.split(",") for r in p.read_text(encoding="utf-8").splitlines()[1:]]
        for ds in dict.fromkeys(r[0] for r in rows):
            k = [r[1] for r in rows if r[0] == ds and r[3] == "1"]
            lines.append(f"chosen k ({ds}): {k[0] if k else '?'}")
        lines.append("plot-ready curve: wcss_curve.csv (dataset,k,wcss,chosen)")
    else:
        missing.append("wcss_curve.csv")
        lines.append("[absent] wcss_curve.csv")
    lines.append("")

    p = out / "importance.json"
    lines.append("## Top features (PCA highest |loading|)")
    if p.is_file():
        imp = json.loads(p.read_text(encoding="utf-8"))
        lines += _table([(f, c) for f, c in imp["ranking"]], ("feature", "count"))
        for ds, rows in imp["per_dataset"].items():
            lines.append(f"{ds}: " + ", ".join(f"PC{j + 1}={f} ({a:.3f})" for j, f, a in rows))
    else:
        missing.append("importance.json")
        lines.append("[absent] importance.json")
    lines.append("")

    lines.append("## Localized accuracy (stratified k-fold)")
    evals = sorted(out.glob("eval_*.json"))
    if evals:
        rows = []
        for e in evals:
            doc = json.loads(e.read_text(encoding="utf-8"))
            for algo, r in doc["reports"].items():
                rows.append((doc["probe"], algo, f"{r['mean_accuracy']:.4f}", f"±{r['ci95_halfwidth']:.4f}"))
            for algo in doc.get("not_implemented", []):
                rows.append((doc["probe"], algo, "not implemented", ""))
        lines += _table(rows, ("probe", "algorithm", "mean acc", "ci95"))
    else:
        missing.append("eval_<probe>.json")
        lines.append("[absent] eval_<probe>.json")
    lines.append("")

    p = out / "federation_rounds.csv"
    lines.append("## Federated training")
    if p.is_file():
        rows = [r.split(",") for r in p.read_text(encoding="utf-8").splitlines()[1:]]
        if rows:
            last = rows[-1]
            lines.append(f"rounds: {len(rows)}; final accuracy {float(last[1]):.4f}; final loss {float(last[2]):.4f}")
        lines.append("plot-ready curve: federation_rounds.csv (round,accuracy,loss)")
    else:
        missing.append("federation_rounds.csv")
        lines.append("[absent] federation_rounds.csv")
    lines.append("")

    p = out / "actions.jsonl"
    lines.append("## Detection actions")
    if p.is_file():
        acts = [json.loads(x) for x in p.read_text(encoding="utf-8").splitlines() if x.strip()]
        if acts:
            lines += _table([(a["step"], a["slice"], a["directive"]["type"], f"{a['attack_ratio']:.3f}", a["ok"])
                             for a in acts], ("step", "slice", "directive", "ratio", "ok"))
        else:
            lines.append("no actions")
    else:
        missing.append("actions.jsonl")
        lines.append("[absent] actions.jsonl")
    if not (out / "manifest.json").is_file():
        missing.append("manifest.json")
    return lines, missing


def cmd_report(args) -> int:
    out = Path(args.dir)
    if not out.is_dir():
        return _fail(EXIT_DATA, "report", DataError(f"not a directory: {out}"))
    lines, missing = render_report(out)
    if len(missing) == 6:
        return _fail(EXIT_DATA, "report", DataError(f"no artifacts found in {out}"))
    print("\n".join(lines))
    if missing:
        print("\nmissing artifacts:\n" + "\n".join(f"  {m}" for m in missing))
    return EXIT_OK


# -- slice commands --------------------------------------------------------------------


def _load_state(path: Path, catalog: str | None) -> OrchestratorState:
    if path.is_file():
        return OrchestratorState.from_dict(json.loads(path.read_text(encoding="utf-8")))
    market = load_catalog(catalog) if catalog else parse_catalog(_data_text("catalog_default.csv"))
    return initial_state(market)


def _save_state(path: Path, state: OrchestratorState) -> None:
    path.write_bytes(state.to_bytes())


def _print_slice(state: OrchestratorState, sid: str) -> None:
    s = state.slice(sid)
    flag = " (quarantined)" if s.quarantined else ""
    print(f"slice {sid}: {s.state.value}{flag}")
    if s.monitors:
        print("monitors: " + ", ".join(s.monitors))
    if s.allocations:
        for rid, amount in s.allocations:
            print(f"  {rid}: {amount:g}")
    else:
        print("  no allocations")


def _parse_demand(text: str) -> tuple[str, float]:
    kind, sep, amount = text.partition("=")
    if not sep:
        raise UsageError(f"demand must look like kind=amount, got {text!r}")
    try:
        return kind.strip(), float(amount)
    except ValueError:
        raise UsageError(f"bad demand amount in {text!r}") from None


def cmd_slice(args) -> int:
    path = Path(args.state)
    state = _load_state(path, getattr(args, "catalog", None))
    orch = Orchestrator(state)
    if args.slice_cmd == "request":
        demands = tuple(_parse_demand(d) for d in args.demand)
        req = SliceRequest(args.id, demands, tenant=args.tenant)
        steps = [
            {"op": "prepare", "request": request_to_dict(req), "policy": args.policy},
            {"op": "commission", "slice": args.id},
            {"op": "instantiate", "slice": args.id, "probes": list(args.probe)},
        ]
        for cmd in steps:
            reply = orch.execute(cmd)
            if not reply.ok:
                _save_state(path, orch.state)
                raise DataError(f"{cmd['op']} failed for slice {args.id}: {reply.error}")
            if orch.state.slices[args.id].state is SliceState.FAILED:
                _save_state(path, orch.state)
                raise DataError(f"slice {args.id} failed during {cmd['op']}: {orch.state.event_log[-1][1].get('error')}")
    elif args.slice_cmd == "status":
        if args.id not in orch.state.slices:
            raise UnknownSlice(args.id)
    elif args.slice_cmd == "decommission":
        if args.id not in orch.state.slices:
            raise UnknownSlice(args.id)
        reply = orch.execute({"op": "supervise", "slice": args.id, "directive": directive_to_dict(Decommission())})
        if not reply.ok:
            raise DataError(reply.error)
    _save_state(path, orch.state)
    _print_slice(orch.state, args.id)
    return EXIT_OK


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for part in generate_synthetic(args.seed, load_spec(args.spec), args.n_per_probe):
        export_flow_csv(part.records, out / f"flows_{part.probe_id}.csv")
        print(f"{out / f'flows_{part.probe_id}.csv'}: {len(part)} flows")
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mlslice", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mlslice {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run-experiment", help="run the full pipeline from a plan")
    run.add_argument("--plan", help="plan JSON (default: shipped plan)")
    run.add_argument("--out", help="output directory (default: plan 'output' or ./results)")
    run.add_argument("--seed", type=int, help="override the plan seed")
    run.add_argument("--catalog", help="resource catalog CSV")
    run.add_argument("--dataset", help="flow CSV for real-data mode")
    run.add_argument("--column-map", help="column-map JSON for --dataset")
    run.set_defaults(func=cmd_run_experiment)

    sl = sub.add_parser("slice", help="drive the orchestrator against a state snapshot")
    slsub = sl.add_subparsers(dest="slice_cmd", required=True, parser_class=_Parser)
    req = slsub.add_parser("request", help="prepare, commission and instantiate a slice")
    req.add_argument("--demand", action="append", required=True, metavar="KIND=AMOUNT")
    req.add_argument("--probe", action="append", default=[], help="monitoring probe (repeatable)")
    req.add_argument("--policy", default="MinCost", choices=["MinCost", "MaxResidual", "CleanEnergyFirst"])
    req.add_argument("--tenant", default="")
    req.add_argument("--catalog", help="catalog used when the state file does not exist yet")
    for name, sp in (("request", req), ("status", slsub.add_parser("status", help="show one slice")),
                     ("decommission", slsub.add_parser("decommission", help="decommission a slice"))):
        sp.add_argument("--state", required=True, help="orchestrator snapshot JSON")
        sp.add_argument("id", help="slice id")
    sl.set_defaults(func=cmd_slice)

    rep = sub.add_parser("report", help="summarise a results directory")
    rep.add_argument("dir")
    rep.set_defaults(func=cmd_report)

    ver = sub.add_parser("verify", help="recheck manifest hashes in a results directory")
    ver.add_argument("dir")
    ver.set_defaults(func=cmd_verify)

    gen = sub.add_parser("generate", help="write synthetic per-probe flow CSVs")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--n-per-probe", type=int, default=1000)
    gen.add_argument("--spec", help="generator spec JSON (default: shipped)")
    gen.set_defaults(func=cmd_generate)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, args.command, exc)
    except (DataError, SliceError, ValueError, KeyError, OSError) as exc:
        return _fail(EXIT_DATA, args.command, exc)
    except Exception as exc:  # noqa: BLE001
        log.debug("%s", traceback.format_exc())
        return _fail(EXIT_INTERNAL, args.command, exc)


if __name__ == "__main__":
    sys.exit(main())
