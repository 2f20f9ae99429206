"""Hour-of-day occupancy forecasting.

The baseline model is the arithmetic mean of observed occupancy per
hour-of-day, with an optional linear precipitation adjustment. Hours with
no samples fall back to the caller-supplied current occupancy. Training is
order-independent and deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable

from parktwin.clock import parse_iso_utc
from parktwin.errors import BadHour

HOURS = 24


@dataclass(frozen=True)
class ForecastModel:
    per_hour_means: tuple[float, ...] = field(default=(0.0,) * HOURS)
    sample_counts: tuple[int, ...] = field(default=(0,) * HOURS)
    weather_coefficient: float = 0.0

    def __post_init__(self):
        if len(self.per_hour_means) != HOURS or len(self.sample_counts) != HOURS:
            raise ValueError("model arrays must have 24 slots")

    def to_json(self) -> dict:
        return {
            "perHourMeans": list(self.per_hour_means),
            "sampleCounts": list(self.sample_counts),
            "weatherCoefficient": self.weather_coefficient,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ForecastModel":
        return cls(
            per_hour_means=tuple(doc["perHourMeans"]),
            sample_counts=tuple(doc["sampleCounts"]),
            weather_coefficient=float(doc.get("weatherCoefficient", 0.0)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ForecastModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def train(
    history: Iterable[tuple[datetime | str, float]],
    weather_coefficient: float = 0.0,
) -> ForecastModel:
    """Fit per-hour means from (timestamp, occupiedCount) samples."""
    sums = [0.0] * HOURS
    counts = [0] * HOURS
    for stamp, occupied in history:
        if isinstance(stamp, str):
            stamp = parse_iso_utc(stamp)
        hour = stamp.hour
        sums[hour] += occupied
        counts[hour] += 1
    means = tuple(sums[h] / counts[h] if counts[h] else 0.0 for h in range(HOURS))
    return ForecastModel(means, tuple(counts), weather_coefficient)


def forecast(
    model: ForecastModel,
    hour_of_day: int,
    weather: dict | None = None,
    fallback_occupied: float = 0.0,
    total_spots: int | None = None,
) -> float:
    """Expected occupied count for the given hour.

    Hours without samples yield ``fallback_occupied``. With weather input,
    the value scales by (1 + coefficient * precipitationProbability); the
    result clamps to [0, total_spots] when a capacity is given.
    """
    if not isinstance(hour_of_day, int) or not 0 <= hour_of_day < HOURS:
        raise BadHour(f"hour of day must be in 0..23, got {hour_of_day!r}")
    if model.sample_counts[hour_of_day] > 0:
        value = model.per_hour_means[hour_of_day]
    else:
        value = fallback_occupied
    if weather is not None and model.weather_coefficient != 0.0:
        probability = float(weather.get("precipitationProbability", 0.0))
        value *= 1.0 + model.weather_coefficient * probability
    value = max(0.0, value)
    if total_spots is not None:
        value = min(value, float(total_spots))
    return value
