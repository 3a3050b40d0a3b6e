"""In-process stream bus standing in for a message broker."""
from __future__ import annotations

from collections import defaultdict
from typing import Iterator, Sequence

from .records import DatasetPartition, FlowRecord


def stream_batches(records: DatasetPartition | Sequence[FlowRecord], batch_size: int) -> Iterator[list[FlowRecord]]:
    """Yield consecutive batches; the last one may be short."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if isinstance(records, DatasetPartition):
        records = records.records
    for i in range(0, len(records), batch_size):
        yield list(records[i:i + batch_size])


class Cursor:
    def __init__(self, bus: "StreamBus", topic: str):
        self._bus = bus
        self.topic = topic
        self.position = 0

    def poll(self, max_batches: int | None = None) -> list[list[FlowRecord]]:
        log = self._bus._topics[self.topic]
        end = len(log) if max_batches is None else min(len(log), self.position + max_batches)
        out = log[self.position:end]
        self.position = end
        return out


class StreamBus:
    """Append-only topics; each subscriber reads with its own cursor."""

    def __init__(self):
        self._topics: dict[str, list[list[FlowRecord]]] = defaultdict(list)

    def publish(self, topic: str, batch: Sequence[FlowRecord]) -> None:
        self._topics[topic].append(list(batch))

    def subscribe(self, topic: str, from_start: bool = True) -> Cursor:
        cur = Cursor(self, topic)
        if not from_start:
            cur.position = len(self._topics[topic])
        return cur

    def topics(self) -> list[str]:
        return sorted(self._topics)


class MonitoringAgent:
    """Embedded probe that pushes its flow records onto ``flows.<probe>``."""

    def __init__(self, probe_id: str, bus: StreamBus, batch_size: int = 64):
        self.probe_id = probe_id
        self.bus = bus
        self.batch_size = batch_size

    @property
    def topic(self) -> str:
        return f"flows.{self.probe_id}"

    def emit(self, records: Sequence[FlowRecord]) -> int:
        n = 0
        for batch in stream_batches(records, self.batch_size):
            self.bus.publish(self.topic, batch)
            n += 1
        return n
