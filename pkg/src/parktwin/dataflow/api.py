"""Dataflow service: the notification listener backed by the history store.

POST /notify accepts the broker notification body and appends one record
per entity document. The service subscribes itself to every entity change
(idPattern ``.*``, no attribute condition) when attached to a broker.
"""

from __future__ import annotations

from parktwin.broker.client import BrokerClient
from parktwin.clock import Clock, SystemClock
from parktwin.dataflow.history import HistoryStore
from parktwin.httpkit import HttpService, Request, Response


class DataflowService:
    def __init__(
        self,
        history: HistoryStore,
        clock: Clock | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        self.history = history
        self.clock = clock or SystemClock()
        self.service = HttpService("dataflow", host, port)
        self.service.add_route("POST", "/notify", self.receive_notification)
        self.subscription_id: str | None = None

    def start(self) -> "DataflowService":
        self.service.start()
        return self

    def stop(self) -> None:
        self.service.stop()
        self.history.close()

    @property
    def notify_url(self) -> str:
        return self.service.base_url + "/notify"

    def attach(self, broker: BrokerClient) -> str:
        """Subscribe to all context changes, persisting every delivery."""
        self.subscription_id = broker.create_subscription(
            {
                "subject": {"entities": [{"idPattern": ".*"}], "condition": {"attrs": []}},
                "notification": {"url": self.notify_url},
                "throttling": 0,
            }
        )
        return self.subscription_id

    def receive_notification(self, request: Request) -> Response:
        records = self.history.on_notification(request.json() or {}, self.clock.now())
        return Response(200, {"appended": len(records)})
