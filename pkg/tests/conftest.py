import threading

import pytest

from parktwin.httpkit import HttpService, Request, Response


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Print one PASS/FAIL line per acceptance criterion as it completes."""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in str(item.fspath):
        return
    label = getattr(item.function, "criterion", None)
    if not label:
        return
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    status = "PASS" if report.passed else "FAIL"
    extra = getattr(item, "_criterion_detail", "")
    line = f"[{status}] {label}" + (f" ({extra})" if extra else "")
    if reporter is not None:
        reporter.write_line(line)
    else:
        print(line)


def criterion(label):
    """Tag an acceptance test with its criterion name for reporting."""

    def mark(fn):
        fn.criterion = label
        return fn

    return mark


class RecordingEndpoint:
    """HTTP sink that records every POSTed JSON body, with scriptable status codes."""

    def __init__(self, status_script: list[int] | None = None):
        self.service = HttpService("sink")
        self.service.add_route("POST", "/notify", self._handle)
        self.bodies: list[dict] = []
        self.lock = threading.Lock()
        self.status_script = list(status_script or [])
        self.hits = 0

    def _handle(self, request: Request) -> Response:
        with self.lock:
            self.hits += 1
            status = self.status_script.pop(0) if self.status_script else 200
            if status < 400:
                try:
                    self.bodies.append(request.json())
                except ValueError:
                    self.bodies.append(request.text())
        return Response(status, {"error": "scripted"} if status >= 400 else None)

    def start(self):
        self.service.start()
        return self

    def stop(self):
        self.service.stop()

    @property
    def url(self) -> str:
        return self.service.base_url + "/notify"


@pytest.fixture
def sink():
    endpoint = RecordingEndpoint().start()
    yield endpoint
    endpoint.stop()
