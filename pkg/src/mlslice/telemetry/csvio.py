"""Flow-feature CSV import/export with a rejects report."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

from .records import DatasetPartition, FlowRecord, Proto, TrafficClass, check_record

FIELDS = (
    "probe_id", "timestamp_s", "duration_s", "src", "dst", "proto",
    "s_load", "r_load", "s_pkts", "r_pkts", "s_bytes", "r_bytes", "label",
)
REQUIRED = ("duration_s", "s_load", "r_load", "s_pkts", "r_pkts", "s_bytes", "r_bytes", "label")
_FLOATS = {"timestamp_s", "duration_s", "s_load", "r_load"}
_INTS = {"s_pkts", "r_pkts", "s_bytes", "r_bytes"}


class EmptyDataset(ValueError):
    pass


class MissingColumn(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"missing column {self.name!r}"


def identity_map() -> dict[str, str]:
    return {f: f for f in FIELDS}


def load_column_map(path: str | Path) -> dict:
    """Read a column-map config: either a flat ``{external: field}`` map or
    ``{"columns": {...}, "labels": {...}, "check_load": bool}``."""
    cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    if "columns" not in cfg:
        cfg = {"columns": cfg}
    return cfg


def _parse_int(text: str) -> int:
    v = float(text)
    if not v.is_integer():
        raise ValueError(f"expected an integer count, got {text!r}")
    return int(v)


def import_flow_csv(
    path: str | Path,
    column_map: Mapping[str, str] | None = None,
    *,
    probe_id: str | None = None,
    labels: Mapping[str, str] | None = None,
    check_load: bool = True,
    rejects_path: str | Path | None = None,
) -> tuple[DatasetPartition, list[dict]]:
    """Read a flow CSV into a partition.

    ``column_map`` maps external header names to FlowRecord fields.
    ``labels`` maps external label strings to traffic-class names.
    Rows failing validation go to the returned rejects list (and to
    ``rejects_path`` as JSONL when given) with their 1-based line number.
    ``check_load=False`` skips the load/bytes consistency check for
    exports whose load columns are computed differently.
    """
    column_map = dict(column_map or identity_map())
    field_of = {ext: f for ext, f in column_map.items()}
    col_of = {f: ext for ext, f in field_of.items()}
    for f in col_of:
        if f not in FIELDS:
            raise ValueError(f"column map targets unknown field {f!r}")
    for f in REQUIRED:
        if f not in col_of:
            raise MissingColumn(f)
    labels = dict(labels or {})

    records: list[FlowRecord] = []
    rejects: list[dict] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for f, ext in col_of.items():
            if ext not in header:
                raise MissingColumn(ext)
        for row in reader:
            line = reader.line_num
            try:
                rec = _row_to_record(row, col_of, labels, probe_id)
                problem = check_record(rec, check_load=check_load)
            except (ValueError, TypeError) as exc:
                problem = str(exc)
            if problem:
                rejects.append({"line": line, "reason": problem})
            else:
                records.append(rec)
    if rejects_path is not None:
        write_rejects(rejects, rejects_path)
    if not records:
        raise EmptyDataset(f"{path}: no valid rows ({len(rejects)} rejected)")
    pid = probe_id or records[0].probe_id
    return DatasetPartition(pid, tuple(records)), rejects


def _row_to_record(row, col_of, labels, probe_id) -> FlowRecord:
    vals: dict = {}
    for f in FIELDS:
        ext = col_of.get(f)
        raw = row.get(ext) if ext else None
        raw = raw.strip() if isinstance(raw, str) else raw
        if f in _FLOATS:
            vals[f] = float(raw) if raw not in (None, "") else 0.0
            if f != "timestamp_s" and raw in (None, ""):
                raise ValueError(f"{f} is empty")
        elif f in _INTS:
            if raw in (None, ""):
                raise ValueError(f"{f} is empty")
            vals[f] = _parse_int(raw)
        elif f == "proto":
            key = (raw or "other").lower()
            vals[f] = Proto(key) if key in Proto._value2member_map_ else Proto.OTHER
        elif f == "label":
            name = labels.get(raw, raw)
            if name not in TrafficClass._value2member_map_:
                raise ValueError(f"unknown label {raw!r}")
            vals[f] = TrafficClass(name)
        elif f == "probe_id":
            vals[f] = probe_id or raw or "unknown"
        else:
            vals[f] = raw or "?"
    return FlowRecord(**vals)


def write_rejects(rejects: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rejects:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def export_flow_csv(records: Sequence[FlowRecord], path: str | Path) -> None:
    """Write records with canonical headers; floats use repr so they re-import exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELDS)
        for r in records:
            w.writerow([
                r.probe_id, repr(r.timestamp_s), repr(r.duration_s), r.src, r.dst, r.proto.value,
                repr(r.s_load), repr(r.r_load), r.s_pkts, r.r_pkts, r.s_bytes, r.r_bytes, r.label.value,
            ])
