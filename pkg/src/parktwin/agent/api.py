"""HTTP surface of the IoT gateway.

Southbound devices POST text/plain Ultralight measures to
``/iot/d?k=<deviceKey>&i=<sensorId>``; the broker POSTs notifications to
``/notify``.
"""

from __future__ import annotations

from parktwin.agent.gateway import UltralightGateway
from parktwin.errors import MalformedPayload
from parktwin.httpkit import HttpService, Request, Response


class AgentApi:
    def __init__(self, gateway: UltralightGateway, host: str = "127.0.0.1", port: int = 0):
        self.gateway = gateway
        self.service = HttpService("iot-agent", host, port)
        self.service.add_route("POST", "/iot/d", self.receive_measure)
        self.service.add_route("POST", "/notify", self.receive_notification)

    def start(self) -> "AgentApi":
        self.service.start()
        return self

    def stop(self) -> None:
        self.service.stop()

    @property
    def base_url(self) -> str:
        return self.service.base_url

    def receive_measure(self, request: Request) -> Response:
        device_key = request.query_param("k")
        if not device_key:
            raise MalformedPayload("missing device key parameter 'k'")
        writes = self.gateway.handle_measure(
            device_key, request.text(), sensor_id=request.query_param("i")
        )
        return Response(200, {"writes": len(writes)})

    def receive_notification(self, request: Request) -> Response:
        sent = self.gateway.handle_notification(request.json() or {})
        return Response(200, {"commands": len(sent)})
