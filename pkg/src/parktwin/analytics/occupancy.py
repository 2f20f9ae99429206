"""Live occupancy aggregate over parking-spot status changes.

The tracker folds status transitions into three counters whose sum is
always the registered spot count. Every spot starts free; repeated
identical statuses are idempotent.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

from parktwin.clock import Clock, SystemClock, format_iso_utc

logger = logging.getLogger(__name__)

STATUSES = ("free", "occupied", "closed")


@dataclass(frozen=True)
class OccupancySnapshot:
    occupied: int
    free: int
    closed: int
    as_of: str

    @property
    def total(self) -> int:
        return self.occupied + self.free + self.closed


class OccupancyTracker:
    def __init__(self, total_spots: int, clock: Clock | None = None):
        if total_spots < 1:
            raise ValueError("total_spots must be positive")
        self.total_spots = total_spots
        self.clock = clock or SystemClock()
        self._status: dict[int, str] = {}
        self._counts = {"free": total_spots, "occupied": 0, "closed": 0}
        self._lock = threading.Lock()
        self.unknown_spots = 0
        self.samples: list[tuple[str, int]] = []

    def on_spot_change(self, notification: dict) -> OccupancySnapshot:
        """Fold the ParkingSpot documents of one notification into the counts."""
        with self._lock:
            for doc in notification.get("data", []):
                if doc.get("type") != "ParkingSpot":
                    continue
                status = doc.get("status")
                if status not in STATUSES:
                    continue
                spot = self._spot_number(doc)
                if spot is None:
                    self.unknown_spots += 1
                    continue
                old = self._status.get(spot, "free")
                if old != status:
                    self._counts[old] -= 1
                    self._counts[status] += 1
                    self._status[spot] = status
            snapshot = self._snapshot_locked()
            self.samples.append((snapshot.as_of, snapshot.occupied))
            return snapshot

    def snapshot(self) -> OccupancySnapshot:
        with self._lock:
            return self._snapshot_locked()

    def _snapshot_locked(self) -> OccupancySnapshot:
        return OccupancySnapshot(
            occupied=self._counts["occupied"],
            free=self._counts["free"],
            closed=self._counts["closed"],
            as_of=format_iso_utc(self.clock.now()),
        )

    def _spot_number(self, doc: dict) -> int | None:
        name = doc.get("name")
        if name is None:
            entity_id = doc.get("id", "")
            name = entity_id.split(":", 1)[1] if ":" in entity_id else entity_id
        try:
            spot = int(name)
        except (TypeError, ValueError):
            logger.warning("spot name %r is not a number; change ignored", name)
            return None
        if not 1 <= spot <= self.total_spots:
            logger.warning("spot %d outside registered range 1..%d", spot, self.total_spots)
            return None
        return spot
