"""Service stubs standing in for the physical world and the external API.

The weather stub serves scripted documents in order (last one repeats); the
bulb stub plays the actuator fleet, folding received commands into a
per-bulb color map. Both record everything they see.
"""

from __future__ import annotations

import threading

from parktwin.agent.ultralight import parse_command
from parktwin.errors import MalformedCommand
from parktwin.httpkit import HttpService, Request, Response

BULB_COLORS = frozenset({"red", "yellow", "green"})


class WeatherStub:
    def __init__(self, script: list[dict], host: str = "127.0.0.1", port: int = 0):
        if not script:
            raise ValueError("weather script must be non-empty")
        self.script = list(script)
        self._index = 0
        self._lock = threading.Lock()
        self.get_count = 0
        self.service = HttpService("weather-stub", host, port)
        self.service.add_route("GET", "/weather", self._serve)

    def _serve(self, request: Request) -> Response:
        with self._lock:
            self.get_count += 1
            doc = self.script[self._index]
            if self._index < len(self.script) - 1:
                self._index += 1
        return Response(200, doc)

    def start(self) -> "WeatherStub":
        self.service.start()
        return self

    def stop(self) -> None:
        self.service.stop()

    @property
    def url(self) -> str:
        return self.service.base_url + "/weather"


class BulbStub:
    """Records every Ultralight command; state holds each bulb's last color."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.state: dict[str, str] = {}
        self.command_log: list[str] = []
        self.malformed: list[str] = []
        self._lock = threading.Lock()
        self.service = HttpService("bulb-stub", host, port)
        self.service.add_route("POST", "/bulb", self._receive)
        self.service.add_route("GET", "/state", self._state)

    def _state(self, request: Request) -> Response:
        with self._lock:
            return Response(200, {"state": dict(self.state), "commands": len(self.command_log)})

    def _receive(self, request: Request) -> Response:
        body = request.text()
        try:
            self.receive(body)
        except MalformedCommand as exc:
            return Response(400, {"error": exc.code, "description": exc.description})
        return Response(200)

    def receive(self, body: str) -> None:
        with self._lock:
            try:
                command = parse_command(body)
                if command.command != "light" or command.value not in BULB_COLORS:
                    raise MalformedCommand(f"unsupported command {body!r}")
            except MalformedCommand:
                self.malformed.append(body)
                raise
            self.command_log.append(body)
            self.state[command.device_id] = command.value

    def color_of(self, bulb_id: str) -> str | None:
        with self._lock:
            return self.state.get(bulb_id)

    def start(self) -> "BulbStub":
        self.service.start()
        return self

    def stop(self) -> None:
        self.service.stop()

    @property
    def url(self) -> str:
        return self.service.base_url + "/bulb"
