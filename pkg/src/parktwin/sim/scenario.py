"""Seeded scenario driver.

The simulator owns the ground truth: which spot holds which plate. Each
tick it optionally samples one arrival and one departure (plus any scripted
events), emits the corresponding Ultralight payloads, and verifies the
free/occupied/closed partition. The emitted trace is a pure function of
(config, seed): spot picks come from a seeded generator over sorted sets,
plates are sequential integers so the first arrival is plate 123456.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import requests

from parktwin.errors import ParkTwinError, ServiceUnreachable

logger = logging.getLogger(__name__)

import random

DEFAULT_TOTAL_SPOTS = 1450
FIRST_PLATE = 123456


@dataclass(frozen=True)
class ScriptedEvent:
    tick: int
    kind: str  # "arrive" | "depart"
    spot: int

    def __post_init__(self):
        if self.kind not in ("arrive", "depart"):
            raise ParkTwinError(f"unknown scripted event kind {self.kind!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    total_spots: int = DEFAULT_TOTAL_SPOTS
    seed: int = 1
    duration_ticks: int = 200
    arrival_rate: float = 0.3
    departure_rate: float = 0.2
    weather_script: tuple = ()
    scripted_events: tuple = (ScriptedEvent(0, "arrive", 51),)
    weather_poll_ticks: int = 60
    plate_start: int = FIRST_PLATE

    def __post_init__(self):
        if self.total_spots < 1:
            raise ParkTwinError("totalSpots must be at least 1")
        for rate in (self.arrival_rate, self.departure_rate):
            if not 0.0 <= rate <= 1.0:
                raise ParkTwinError("rates must be within [0, 1]")

    @classmethod
    def from_json(cls, doc: dict) -> "ScenarioConfig":
        events = tuple(
            ScriptedEvent(e["tick"], e["kind"], int(e["spot"]))
            for e in doc.get("scriptedEvents", [{"tick": 0, "kind": "arrive", "spot": 51}])
        )
        return cls(
            total_spots=doc.get("totalSpots", DEFAULT_TOTAL_SPOTS),
            seed=doc.get("seed", 1),
            duration_ticks=doc.get("durationTicks", 200),
            arrival_rate=doc.get("arrivalRate", 0.3),
            departure_rate=doc.get("departureRate", 0.2),
            weather_script=tuple(doc.get("weatherScript", [])),
            scripted_events=events,
            weather_poll_ticks=doc.get("weatherPollTicks", 60),
            plate_start=doc.get("plateStart", FIRST_PLATE),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class GroundTruth:
    total_spots: int
    occupied: dict[int, str] = field(default_factory=dict)  # spot -> plate
    free: set[int] = field(default_factory=set)
    closed: set[int] = field(default_factory=set)
    event_log: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        if not self.free and not self.occupied and not self.closed:
            self.free = set(range(1, self.total_spots + 1))

    def check_partition(self) -> None:
        union = set(self.occupied) | self.free | self.closed
        expected = set(range(1, self.total_spots + 1))
        overlap = (
            (set(self.occupied) & self.free)
            | (set(self.occupied) & self.closed)
            | (self.free & self.closed)
        )
        if union != expected or overlap:
            raise ParkTwinError("ground-truth sets no longer partition the spot range")


PostMeasure = Callable[[str, str], None]  # (payload, sensor_id)


class Simulator:
    """Drives arrivals/departures against the gateway's southbound endpoint."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.truth = GroundTruth(config.total_spots)
        self.trace: list[str] = []
        self._rng = random.Random(config.seed)
        self._next_plate = config.plate_start

    def run(
        self,
        post_measure: PostMeasure,
        on_weather_poll: Optional[Callable[[], None]] = None,
    ) -> GroundTruth:
        config = self.config
        scripted: dict[int, list[ScriptedEvent]] = {}
        for event in config.scripted_events:
            scripted.setdefault(event.tick, []).append(event)
        for tick in range(config.duration_ticks):
            if (
                on_weather_poll is not None
                and config.weather_poll_ticks > 0
                and tick % config.weather_poll_ticks == 0
            ):
                on_weather_poll()
            for event in scripted.get(tick, []):
                self._execute(event.kind, event.spot, tick, post_measure)
            if self._rng.random() < config.arrival_rate and self.truth.free:
                spot = self._rng.choice(sorted(self.truth.free))
                self._execute("arrive", spot, tick, post_measure)
            if self._rng.random() < config.departure_rate and self.truth.occupied:
                spot = self._rng.choice(sorted(self.truth.occupied))
                self._execute("depart", spot, tick, post_measure)
            self.truth.check_partition()
        return self.truth

    def _execute(self, kind: str, spot: int, tick: int, post_measure: PostMeasure) -> None:
        truth = self.truth
        if kind == "arrive":
            if spot not in truth.free:
                logger.warning("scripted arrival at non-free spot %d skipped", spot)
                return
            plate = str(self._next_plate)
            self._next_plate += 1
            payload = f"id|{plate}|t|car|p|{spot}"
            truth.free.discard(spot)
            truth.occupied[spot] = plate
        else:
            if spot not in truth.occupied:
                logger.warning("scripted departure from non-occupied spot %d skipped", spot)
                return
            plate = truth.occupied.pop(spot)
            payload = f"id|{plate}|t|car|d|{spot}"
            truth.free.add(spot)
        truth.event_log.append((tick, kind, spot, plate))
        self.trace.append(payload)
        post_measure(payload, f"sensor-{spot}")


def http_measure_poster(agent_url: str, device_key: str) -> PostMeasure:
    """POST payloads to the agent's southbound endpoint; abort when unreachable."""
    session = requests.Session()

    def post(payload: str, sensor_id: str) -> None:
        try:
            response = session.post(
                f"{agent_url}/iot/d",
                params={"k": device_key, "i": sensor_id},
                data=payload.encode("utf-8"),
                headers={"Content-Type": "text/plain"},
                timeout=10,
            )
        except requests.RequestException as exc:
            raise ServiceUnreachable(f"agent unreachable: {type(exc).__name__}")
        if response.status_code >= 400:
            raise ServiceUnreachable(f"agent rejected measure: HTTP {response.status_code}")

    return post
