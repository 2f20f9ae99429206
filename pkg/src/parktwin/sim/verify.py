"""Conformance checking of the twin against simulator ground truth.

Run only at quiesce. Four assertions: (a) the broker's occupied spot set
equals the ground truth's, (b) the lot counter equals the free-set size,
(c) each commanded bulb shows the color of its spot's status, (d) folding
the history log reproduces the broker's state for every notified entity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from parktwin.broker.client import BrokerClient
from parktwin.dataflow.history import HistoryStore
from parktwin.sim.defaults import PARKING_ENTITY_ID, SPOT_COLOR
from parktwin.sim.scenario import GroundTruth


@dataclass
class ConformanceReport:
    checked: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def note(self, label: str, ok: bool, detail: str = "") -> None:
        self.checked.append(label)
        if not ok:
            self.failures.append(f"{label}: {detail}" if detail else label)

    def to_json(self) -> dict:
        return {"passed": self.passed, "checked": self.checked, "failures": self.failures}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")


def _spot_number(entity_id: str) -> int | None:
    try:
        return int(entity_id.split(":", 1)[1])
    except (IndexError, ValueError):
        return None


def verify(
    truth: GroundTruth,
    broker: BrokerClient,
    bulb_state: dict[str, str],
    history: HistoryStore,
) -> ConformanceReport:
    report = ConformanceReport()

    spot_docs = broker.list_entities(entity_type="ParkingSpot")
    broker_occupied = {
        _spot_number(d["id"]) for d in spot_docs if d.get("status") == "occupied"
    }
    truth_occupied = set(truth.occupied)
    report.note(
        "(a) occupied spot sets equal",
        broker_occupied == truth_occupied,
        f"broker-only={sorted(broker_occupied - truth_occupied)} "
        f"truth-only={sorted(truth_occupied - broker_occupied)}",
    )

    parking_doc, _ = broker.get_entity(PARKING_ENTITY_ID)
    available = parking_doc.get("availableSpotNumber")
    report.note(
        "(b) availableSpotNumber equals free count",
        available == len(truth.free),
        f"availableSpotNumber={available} freeSpots={len(truth.free)}",
    )

    spot_status = {_spot_number(d["id"]): d.get("status") for d in spot_docs}
    bad_bulbs = []
    for bulb_id, color in bulb_state.items():
        spot = _spot_number(bulb_id)
        expected = SPOT_COLOR.get(spot_status.get(spot, ""))
        if expected != color:
            bad_bulbs.append(f"{bulb_id}={color}, expected {expected}")
    report.note("(c) bulb colors match spot statuses", not bad_bulbs, "; ".join(bad_bulbs))

    # (d) is two-way: the history listener subscribes to every change, so at
    # quiesce each broker entity must replay to its live state, and nothing
    # may replay that the broker does not hold.
    replayed = history.replay()
    live_docs = {doc["id"]: doc for doc in broker.list_entities()}
    mismatches = []
    for entity_id in sorted(set(replayed) | set(live_docs)):
        if entity_id not in live_docs:
            mismatches.append(f"{entity_id} replayed but absent from broker")
            continue
        if entity_id not in replayed:
            mismatches.append(f"{entity_id} in broker but never recorded")
            continue
        live_attrs = {k: v for k, v in live_docs[entity_id].items() if k not in ("id", "type")}
        if live_attrs != replayed[entity_id]:
            mismatches.append(
                f"{entity_id}: replay={replayed[entity_id]} live={live_attrs}"
            )
    report.note(
        "(d) history replay equals broker state",
        not mismatches,
        "; ".join(mismatches[:5]),
    )
    return report
