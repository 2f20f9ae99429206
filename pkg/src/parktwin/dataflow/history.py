"""Append-only historical store with time-range query and replay.

One newline-delimited JSON record per notified entity document, sequence
numbers strictly increasing and gapless within a run. Folding the records
in sequence order reconstructs, at quiesce, the latest attribute state of
every entity that ever appeared in a notification.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from parktwin.clock import parse_iso_utc
from parktwin.errors import BadRange, CorruptRecord, StorageFull


@dataclass(frozen=True)
class HistoricalRecord:
    seq: int
    received_at: str
    entity_id: str
    entity_type: str
    attrs: dict

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "receivedAt": self.received_at,
            "entityId": self.entity_id,
            "entityType": self.entity_type,
            "attrs": self.attrs,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "HistoricalRecord":
        return cls(
            seq=int(doc["seq"]),
            received_at=doc["receivedAt"],
            entity_id=doc["entityId"],
            entity_type=doc["entityType"],
            attrs=dict(doc["attrs"]),
        )


class HistoryStore:
    """Single-writer append log with an in-memory index."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: list[HistoricalRecord] = []
        self._lock = threading.Lock()
        self._file = None
        if self.path.exists():
            self._load_existing()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "a", encoding="utf-8")

    def _load_existing(self) -> None:
        last_seq = 0
        with open(self.path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = HistoricalRecord.from_json(json.loads(line))
                except (ValueError, KeyError) as exc:
                    raise CorruptRecord(f"unparseable record at line {line_no}: {exc}", seq=last_seq + 1)
                if record.seq != last_seq + 1:
                    raise CorruptRecord(
                        f"sequence gap: expected {last_seq + 1}, found {record.seq}", seq=record.seq
                    )
                last_seq = record.seq
                self._records.append(record)

    def append(self, entity_doc: dict, received_at: datetime | str) -> HistoricalRecord:
        """Persist one notified entity document as the next record."""
        if isinstance(received_at, datetime):
            from parktwin.clock import format_iso_utc

            received_at = format_iso_utc(received_at)
        attrs = {k: v for k, v in entity_doc.items() if k not in ("id", "type")}
        with self._lock:
            record = HistoricalRecord(
                seq=len(self._records) + 1,
                received_at=received_at,
                entity_id=entity_doc["id"],
                entity_type=entity_doc.get("type", ""),
                attrs=attrs,
            )
            try:
                self._file.write(json.dumps(record.to_json()) + "\n")
                self._file.flush()
            except OSError as exc:
                raise StorageFull(f"history append failed: {exc}")
            self._records.append(record)
            return record

    def on_notification(self, body: dict, received_at: datetime | str) -> list[HistoricalRecord]:
        """Append one record per entity in the notification, in arrival order."""
        return [self.append(doc, received_at) for doc in body.get("data", [])]

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def records(self) -> list[HistoricalRecord]:
        with self._lock:
            return list(self._records)

    def query(self, entity_id: str, from_time: str, to_time: str) -> list[HistoricalRecord]:
        """Records for the entity with receivedAt in [from, to], ascending seq."""
        start = parse_iso_utc(from_time)
        end = parse_iso_utc(to_time)
        if start > end:
            raise BadRange(f"fromTime {from_time} is after toTime {to_time}")
        return [
            record
            for record in self.records()
            if record.entity_id == entity_id
            and start <= parse_iso_utc(record.received_at) <= end
        ]

    def replay(self, up_to_seq: int | None = None) -> dict[str, dict]:
        """Fold records in seq order into a map of entity id -> latest attrs."""
        state: dict[str, dict] = {}
        expected = 1
        for record in self.records():
            if record.seq != expected:
                raise CorruptRecord(
                    f"sequence gap: expected {expected}, found {record.seq}", seq=record.seq
                )
            expected += 1
            if up_to_seq is not None and record.seq > up_to_seq:
                break
            state.setdefault(record.entity_id, {}).update(record.attrs)
        return state

    def close(self) -> None:
        with self._lock:
            if self._file is not None:
                self._file.close()
                self._file = None
