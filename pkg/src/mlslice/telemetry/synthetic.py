"""Seeded synthetic flow generator.

Each traffic class is a log-normal model over five latent quantities:
flow duration, sender and receiver packet rates, and sender and
receiver mean packet sizes. Packet counts, byte counts and loads are
derived from those, so the loads always equal ``8 * bytes / duration``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .records import CLASSES, PROTOS, DatasetPartition, FlowRecord, Proto, TrafficClass

LATENT = ("duration_s", "s_rate", "r_rate", "s_size", "r_size")
MIXTURE_TOL = 1e-9


class InvalidMixture(ValueError):
    pass


@dataclass(frozen=True)
class ClassModel:
    log_mean: tuple[float, ...]
    log_sigma: tuple[float, ...]
    proto: Mapping[str, float] = field(default_factory=lambda: {"tcp": 1.0})
    # probability that the receiver never answers (zero receiver packets)
    silent_receiver: float = 0.0

    def __post_init__(self):
        if len(self.log_mean) != len(LATENT) or len(self.log_sigma) != len(LATENT):
            raise ValueError(f"class model needs {len(LATENT)} log-means and log-sigmas")
        _check_mixture(self.proto, "proto mix")


@dataclass(frozen=True)
class GeneratorSpec:
    probes: Mapping[str, Mapping[TrafficClass, float]]
    classes: Mapping[TrafficClass, ClassModel]
    window_s: float = 5400.0
    version: int = 1

    def __post_init__(self):
        for probe, mix in self.probes.items():
            _check_mixture(mix, f"probe {probe!r}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "GeneratorSpec":
        classes = {
            TrafficClass(name): ClassModel(
                log_mean=tuple(m["log_mean"]),
                log_sigma=tuple(m["log_sigma"]),
                proto=dict(m.get("proto", {"tcp": 1.0})),
                silent_receiver=float(m.get("silent_receiver", 0.0)),
            )
            for name, m in d["classes"].items()
        }
        probes = {p: {TrafficClass(c): float(w) for c, w in mix.items()} for p, mix in d["probes"].items()}
        return cls(probes=probes, classes=classes, window_s=float(d.get("window_s", 5400.0)),
                   version=int(d.get("version", 1)))

    def with_probes(self, probes: Mapping[str, Mapping]) -> "GeneratorSpec":
        mixes = {p: {TrafficClass(c): float(w) for c, w in mix.items()} for p, mix in probes.items()}
        return GeneratorSpec(mixes, self.classes, self.window_s, self.version)

    def pooled_mixture(self) -> dict[TrafficClass, float]:
        out = {c: 0.0 for c in CLASSES}
        for mix in self.probes.values():
            for c, w in mix.items():
                out[c] += w / len(self.probes)
        return out


def _check_mixture(mix: Mapping, what: str) -> None:
    weights = list(mix.values())
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > MIXTURE_TOL:
        raise InvalidMixture(f"{what}: weights must be non-negative and sum to 1, got {sum(weights)!r}")


def load_spec(path: str | Path | None = None) -> GeneratorSpec:
    """Load a generator spec; ``None`` gives the shipped defaults."""
    if path is None:
        text = resources.files("mlslice.data").joinpath("generator_default.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return GeneratorSpec.from_dict(json.loads(text))


def _probe_rng(seed: int, probe: str) -> np.random.Generator:
    key = [int(b) for b in probe.encode("utf-8")]
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def _sample_class(rng, model: ClassModel, n: int) -> dict[str, np.ndarray]:
    z = rng.normal(np.asarray(model.log_mean), np.asarray(model.log_sigma), size=(n, len(LATENT)))
    duration = np.exp(z[:, 0])
    s_pkts = np.maximum(1, np.rint(np.exp(z[:, 1]) * duration)).astype(np.int64)
    r_pkts = np.maximum(1, np.rint(np.exp(z[:, 2]) * duration)).astype(np.int64)
    if model.silent_receiver > 0:
        r_pkts = np.where(rng.random(n) < model.silent_receiver, 0, r_pkts)
    s_bytes = np.rint(s_pkts * np.exp(z[:, 3])).astype(np.int64)
    r_bytes = np.rint(r_pkts * np.exp(z[:, 4])).astype(np.int64)
    names = list(model.proto)
    proto_idx = rng.choice(len(names), size=n, p=[model.proto[k] for k in names])
    return {
        "duration_s": duration,
        "s_pkts": s_pkts,
        "r_pkts": r_pkts,
        "s_bytes": s_bytes,
        "r_bytes": r_bytes,
        "proto": np.array([Proto(names[i]) for i in proto_idx], dtype=object),
    }


def _endpoints(rng, label: TrafficClass, probe: str, n: int) -> tuple[list[str], list[str]]:
    hosts = rng.integers(1, 200, size=(n, 2))
    subnet = {"bottom": 10, "left": 20, "right": 30}.get(probe, 40)
    src = [f"10.{subnet}.0.{h}" for h in hosts[:, 0]]
    dst = [f"10.{subnet}.1.{h}" for h in hosts[:, 1]]
    if label is TrafficClass.DUPLICATED_IP:
        # two stations claiming the same address
        dst = [f"10.{subnet}.0.{h}" for h in hosts[:, 0]]
    elif label is TrafficClass.MISCONFIGURED_IP:
        src = [f"192.168.{h % 4}.{h}" for h in hosts[:, 0]]
    return src, dst


def generate_probe(spec: GeneratorSpec, probe: str, n: int, seed: int) -> DatasetPartition:
    rng = _probe_rng(seed, probe)
    mix = spec.probes[probe]
    weights = np.array([mix.get(c, 0.0) for c in CLASSES])
    counts = rng.multinomial(n, weights / weights.sum())
    records: list[FlowRecord] = []
    for label, count in zip(CLASSES, counts):
        if count == 0:
            continue
        f = _sample_class(rng, spec.classes[label], int(count))
        src, dst = _endpoints(rng, label, probe, int(count))
        ts = rng.uniform(0.0, spec.window_s, size=count)
        for i in range(count):
            d = float(f["duration_s"][i])
            sb, rb = int(f["s_bytes"][i]), int(f["r_bytes"][i])
            records.append(
                FlowRecord(
                    probe_id=probe,
                    timestamp_s=float(ts[i]),
                    duration_s=d,
                    src=src[i],
                    dst=dst[i],
                    proto=f["proto"][i],
                    s_load=8.0 * sb / d,
                    r_load=8.0 * rb / d,
                    s_pkts=int(f["s_pkts"][i]),
                    r_pkts=int(f["r_pkts"][i]),
                    s_bytes=sb,
                    r_bytes=rb,
                    label=label,
                )
            )
    records.sort(key=lambda r: (r.timestamp_s, r.label.index))
    return DatasetPartition(probe, tuple(records))


def generate_synthetic(seed: int, spec: GeneratorSpec | None = None, n_per_probe: int = 1000) -> list[DatasetPartition]:
    """One partition per probe in ``spec``, deterministic in ``seed``.

    Every probe draws from its own stream keyed on (seed, probe name), so
    adding a probe never perturbs the others.
    """
    if n_per_probe < 1:
        raise ValueError("n_per_probe must be >= 1")
    spec = spec or load_spec()
    return [generate_probe(spec, probe, n_per_probe, seed) for probe in spec.probes]


def single_class_spec(label: TrafficClass | str, base: GeneratorSpec | None = None) -> GeneratorSpec:
    base = base or load_spec()
    return base.with_probes({p: {TrafficClass(label): 1.0} for p in base.probes})


__all__ = [
    "ClassModel",
    "GeneratorSpec",
    "InvalidMixture",
    "LATENT",
    "PROTOS",
    "generate_probe",
    "generate_synthetic",
    "load_spec",
    "single_class_spec",
]
