"""Injectable clocks.

Components that stamp data (history records, tokens, weather transforms)
take a clock argument instead of reading the system time ambiently, so tests
can drive time deterministically.
"""

from __future__ import annotations

import re
import threading
import time
from datetime import datetime, timedelta, timezone

_FRACTION_RE = re.compile(r"\.(\d+)")


def parse_iso_utc(text: str) -> datetime:
    """Parse an ISO-8601 UTC timestamp.

    Accepts a trailing 'Z' and any fractional-second width (fromisoformat
    before 3.11 insists on exactly 3 or 6 digits).
    """
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    text = _FRACTION_RE.sub(lambda m: "." + m.group(1)[:6].ljust(6, "0"), text, count=1)
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp lacks timezone: {text!r}")
    return dt.astimezone(timezone.utc)


def format_iso_utc(dt: datetime) -> str:
    """Render a UTC timestamp as e.g. ``2020-08-03T09:00:00.000Z``."""
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


class Clock:
    """Interface: ``now()`` returns an aware UTC datetime."""

    def now(self) -> datetime:
        raise NotImplementedError

    def monotonic(self) -> float:
        raise NotImplementedError

    def sleep(self, seconds: float) -> None:
        raise NotImplementedError


class SystemClock(Clock):
    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def monotonic(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class ManualClock(Clock):
    """Clock advanced explicitly by tests; ``sleep`` advances it instantly."""

    def __init__(self, start: datetime | str = "2020-08-03T09:00:00Z"):
        if isinstance(start, str):
            start = parse_iso_utc(start)
        self._now = start.astimezone(timezone.utc)
        self._mono = 0.0
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            return self._now

    def monotonic(self) -> float:
        with self._lock:
            return self._mono

    def sleep(self, seconds: float) -> None:
        self.advance(seconds)

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._now += timedelta(seconds=seconds)
            self._mono += seconds
