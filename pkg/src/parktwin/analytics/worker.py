"""Analytics worker: notification consumer plus forecast publication.

Subscribes to parking-spot status changes and weather updates, feeds a
single consumer loop over an inbound queue, and publishes forecasts back
into the broker as the ``occupancyForecast:parking:1`` entity.
"""

from __future__ import annotations

import logging
import queue
import threading

from parktwin.analytics.forecast import ForecastModel, forecast, train
from parktwin.analytics.occupancy import OccupancyTracker
from parktwin.broker.client import BrokerClient
from parktwin.clock import Clock, SystemClock, format_iso_utc
from parktwin.httpkit import HttpService, Request, Response

logger = logging.getLogger(__name__)

FORECAST_ENTITY_ID = "occupancyForecast:parking:1"
FORECAST_ENTITY_TYPE = "OccupancyForecast"


class AnalyticsWorker:
    def __init__(
        self,
        broker: BrokerClient,
        total_spots: int,
        weather_coefficient: float = 0.0,
        clock: Clock | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        self.broker = broker
        self.clock = clock or SystemClock()
        self.tracker = OccupancyTracker(total_spots, clock=self.clock)
        self.weather_coefficient = weather_coefficient
        self.latest_weather: dict | None = None
        self.model = ForecastModel(weather_coefficient=weather_coefficient)
        self._queue: queue.Queue = queue.Queue()
        self._consumer: threading.Thread | None = None
        self.service = HttpService("analytics", host, port)
        self.service.add_route("POST", "/notify", self._receive)
        self.subscription_ids: list[str] = []

    def start(self) -> "AnalyticsWorker":
        self.service.start()
        self._consumer = threading.Thread(target=self._consume, name="analytics", daemon=True)
        self._consumer.start()
        return self

    def stop(self) -> None:
        self._queue.put(None)
        if self._consumer is not None:
            self._consumer.join(timeout=5)
            self._consumer = None
        self.service.stop()

    @property
    def notify_url(self) -> str:
        return self.service.base_url + "/notify"

    def attach(self, broker: BrokerClient | None = None) -> list[str]:
        """Subscribe to spot status changes and weather forecast updates."""
        broker = broker or self.broker
        self.subscription_ids = [
            broker.create_subscription(
                {
                    "subject": {
                        "entities": [{"type": "ParkingSpot"}],
                        "condition": {"attrs": ["status"]},
                    },
                    "notification": {"url": self.notify_url},
                }
            ),
            broker.create_subscription(
                {
                    "subject": {"entities": [{"idPattern": "weatherForecast:.*"}]},
                    "notification": {"url": self.notify_url},
                }
            ),
        ]
        return self.subscription_ids

    def _receive(self, request: Request) -> Response:
        self._queue.put(request.json())
        return Response(200)

    def _consume(self) -> None:
        while True:
            body = self._queue.get()
            if body is None:
                return
            try:
                self.process_notification(body)
            except Exception:
                logger.exception("notification processing failed")

    def process_notification(self, body: dict) -> None:
        docs = body.get("data", [])
        if any(doc.get("type") == "ParkingSpot" for doc in docs):
            self.tracker.on_spot_change(body)
        for doc in docs:
            if doc.get("type") == "WeatherForecast":
                self.latest_weather = {k: v for k, v in doc.items() if k not in ("id", "type")}

    def drain(self, timeout: float = 5.0) -> None:
        """Block until the inbound queue is empty (tests and quiesce)."""
        import time

        deadline = time.monotonic() + timeout
        while not self._queue.empty() and time.monotonic() < deadline:
            time.sleep(0.01)

    def train_from_samples(self) -> ForecastModel:
        self.model = train(self.tracker.samples, self.weather_coefficient)
        return self.model

    def forecast_for(self, hour_of_day: int, use_weather: bool = True) -> float:
        snapshot = self.tracker.snapshot()
        return forecast(
            self.model,
            hour_of_day,
            weather=self.latest_weather if use_weather else None,
            fallback_occupied=float(snapshot.occupied),
            total_spots=self.tracker.total_spots,
        )

    def publish_forecast(self, value: float, horizon_hour: int) -> None:
        self.broker.upsert_entity(
            {
                "id": FORECAST_ENTITY_ID,
                "type": FORECAST_ENTITY_TYPE,
                "expectedOccupied": value,
                "forHour": horizon_hour,
                "computedAt": format_iso_utc(self.clock.now()),
            }
        )
