"""Periodic source-to-broker pipelines.

Each pipeline runs an independent loop: wait one period, GET the source,
transform, upsert into the broker. Failures (non-2xx, parse errors, broker
down) are logged and skipped; the next tick proceeds regardless.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path

import requests

from parktwin.broker.client import BrokerClient
from parktwin.clock import Clock, SystemClock
from parktwin.dataflow.transform import MappingSpec, transform
from parktwin.errors import ParkTwinError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineSpec:
    source_url: str
    period_seconds: float
    mapping: MappingSpec
    broker_url: str
    headers: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.period_seconds <= 0:
            raise ParkTwinError("periodSeconds must be positive")

    @classmethod
    def from_json(cls, doc: dict) -> "PipelineSpec":
        source = doc["source"]
        return cls(
            source_url=source["url"],
            period_seconds=float(source["periodSeconds"]),
            mapping=MappingSpec.from_json(doc["transform"]),
            broker_url=doc["sink"]["brokerUrl"],
            headers=dict(source.get("headers", {})),
        )

    @staticmethod
    def load_config(path: str | Path) -> list["PipelineSpec"]:
        docs = json.loads(Path(path).read_text(encoding="utf-8"))
        return [PipelineSpec.from_json(doc) for doc in docs]


class PipelineRunner:
    def __init__(self, spec: PipelineSpec, clock: Clock | None = None):
        self.spec = spec
        self.clock = clock or SystemClock()
        self.broker = BrokerClient(spec.broker_url)
        self._session = requests.Session()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.poll_count = 0
        self.delivered_count = 0

    def start(self) -> "PipelineRunner":
        self._thread = threading.Thread(target=self._loop, name="pipeline", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def _loop(self) -> None:
        while not self._stop.wait(self.spec.period_seconds):
            self.tick_once()

    def tick_once(self) -> bool:
        """One poll-transform-upsert cycle; returns True when it reached the sink."""
        document = self.poll()
        if document is None:
            return False
        try:
            entity_doc = transform(self.spec.mapping, document, self.clock.now())
        except ParkTwinError as exc:
            logger.warning("transform failed: %s; tick skipped", exc.description)
            return False
        try:
            self.broker.upsert_entity(entity_doc)
        except ParkTwinError as exc:
            logger.warning("sink upsert failed: %s; retried next tick", exc.description)
            return False
        self.delivered_count += 1
        return True

    def poll(self) -> dict | None:
        self.poll_count += 1
        try:
            response = self._session.get(
                self.spec.source_url, headers=self.spec.headers, timeout=10
            )
        except requests.RequestException as exc:
            logger.warning("source poll failed: %s; tick skipped", type(exc).__name__)
            return None
        if not 200 <= response.status_code < 300:
            logger.warning("source returned HTTP %d; tick skipped", response.status_code)
            return None
        try:
            return response.json()
        except ValueError:
            logger.warning("source returned unparseable JSON; tick skipped")
            return None
