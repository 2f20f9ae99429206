"""Full-stack orchestration: every service wired over its HTTP surface.

Startup order: broker (seeded with the lot entity), bulb stub, gateway with
its spot-status subscription, weather stub and pipeline, history listener,
analytics worker, then identity and the enforcement proxy. The scenario
driver talks only to the gateway's southbound endpoint; verification waits
for quiesce (delivery queue at zero on two consecutive polls).
"""

from __future__ import annotations

import logging
import tempfile
import time
from pathlib import Path

from parktwin.agent.api import AgentApi
from parktwin.agent.gateway import UltralightGateway
from parktwin.analytics.worker import AnalyticsWorker
from parktwin.auth.identity import IdentityService
from parktwin.auth.identity_api import IdentityApi
from parktwin.auth.policy import default_policy
from parktwin.auth.proxy import HttpIntrospector, PepProxy
from parktwin.broker.api import BrokerApi
from parktwin.broker.client import BrokerClient
from parktwin.broker.core import ContextBroker
from parktwin.clock import Clock, SystemClock
from parktwin.dataflow.api import DataflowService
from parktwin.dataflow.history import HistoryStore
from parktwin.dataflow.pipeline import PipelineRunner, PipelineSpec
from parktwin.dataflow.transform import MappingSpec
from parktwin.errors import ParkTwinError
from parktwin.sim.defaults import (
    PARKING_DEVICE_KEY,
    PARKING_ENTITY_ID,
    parking_registry,
    weather_mapping,
)
from parktwin.sim.scenario import ScenarioConfig, Simulator, http_measure_poster
from parktwin.sim.stubs import BulbStub, WeatherStub
from parktwin.sim.verify import ConformanceReport, verify

logger = logging.getLogger(__name__)

DEFAULT_USERS = [
    {"username": "admin", "password": "admin-secret", "roles": ["admin"]},
    {"username": "supervisor", "password": "supervisor-secret", "roles": ["supervisor"]},
    {"username": "general", "password": "general-secret", "roles": ["general"]},
]


class TwinStack:
    def __init__(
        self,
        config: ScenarioConfig | None = None,
        history_path: str | Path | None = None,
        with_auth: bool = True,
        clock: Clock | None = None,
        retries: int = 3,
        backoff_base: float = 0.05,
        cas_attempts: int = 128,
        app_sink_url: str | None = None,
    ):
        self.config = config or ScenarioConfig()
        self.clock = clock or SystemClock()
        self.with_auth = with_auth
        self.retries = retries
        self.backoff_base = backoff_base
        self.cas_attempts = cas_attempts
        self.app_sink_url = app_sink_url
        self._tmp = None
        if history_path is None:
            self._tmp = tempfile.TemporaryDirectory(prefix="parktwin-")
            history_path = Path(self._tmp.name) / "history.ndjson"
        self.history_path = Path(history_path)

        self.broker_api: BrokerApi | None = None
        self.broker: BrokerClient | None = None
        self.bulbs: BulbStub | None = None
        self.agent_api: AgentApi | None = None
        self.gateway: UltralightGateway | None = None
        self.weather: WeatherStub | None = None
        self.weather_pipeline: PipelineRunner | None = None
        self.dataflow: DataflowService | None = None
        self.analytics: AnalyticsWorker | None = None
        self.identity: IdentityService | None = None
        self.identity_api: IdentityApi | None = None
        self.proxy: PepProxy | None = None

    # -- lifecycle ---------------------------------------------------------------

    def start(self) -> "TwinStack":
        total = self.config.total_spots
        self.broker_api = BrokerApi(
            ContextBroker(retries=self.retries, backoff_base=self.backoff_base, clock=self.clock)
        ).start()
        self.broker = BrokerClient(self.broker_api.base_url)

        # history listener first, so even the lot seed write is recorded
        self.dataflow = DataflowService(HistoryStore(self.history_path), clock=self.clock).start()
        self.dataflow.attach(self.broker)

        self.broker.create_entity(
            {
                "id": PARKING_ENTITY_ID,
                "type": "OffStreetParking",
                "availableSpotNumber": total,
                "totalSpotNumber": total,
            }
        )

        self.bulbs = BulbStub().start()
        self.gateway = UltralightGateway(
            BrokerClient(self.broker_api.base_url),
            parking_registry(self.bulbs.url),
            cas_attempts=self.cas_attempts,
        )
        self.agent_api = AgentApi(self.gateway).start()
        self.broker.create_subscription(
            {
                "subject": {
                    "entities": [{"type": "ParkingSpot"}],
                    "condition": {"attrs": ["status"]},
                },
                "notification": {"url": self.agent_api.base_url + "/notify"},
            }
        )

        script = list(self.config.weather_script) or [
            {"temp": 27.50, "tempmin": 27.08, "tempmax": 27.60, "precipitation": 0.56,
             "wind": {"speed": 1.5}}
        ]
        self.weather = WeatherStub(script).start()
        self.weather_pipeline = PipelineRunner(
            PipelineSpec(
                source_url=self.weather.url,
                period_seconds=60.0,
                mapping=MappingSpec.from_json(weather_mapping()),
                broker_url=self.broker_api.base_url,
            ),
            clock=self.clock,
        )

        self.analytics = AnalyticsWorker(
            BrokerClient(self.broker_api.base_url), total_spots=total, clock=self.clock
        ).start()
        self.analytics.attach(self.broker)

        if self.app_sink_url:
            self.broker.create_subscription(
                {
                    "subject": {
                        "entities": [{"type": "ParkingSpot"}],
                        "condition": {"attrs": ["status"]},
                    },
                    "notification": {"url": self.app_sink_url},
                }
            )

        if self.with_auth:
            self.identity = IdentityService.from_config({"users": DEFAULT_USERS}, clock=self.clock)
            self.identity_api = IdentityApi(self.identity).start()
            self.proxy = PepProxy(
                upstream_url=self.broker_api.base_url,
                introspect=HttpIntrospector(self.identity_api.base_url),
                policy=default_policy(),
                identity_hint_url=self.identity_api.base_url,
            ).start()
        return self

    def stop(self) -> None:
        # notifier first: once it is down, no delivery can target a stopped
        # subscriber and burn its retry budget against a dead port
        if self.broker_api is not None:
            self.broker_api.broker.shutdown()
        for component in (
            self.proxy,
            self.identity_api,
            self.analytics,
            self.dataflow,
            self.agent_api,
            self.weather,
            self.bulbs,
        ):
            if component is not None:
                component.stop()
        if self.broker_api is not None:
            self.broker_api.stop()
        if self._tmp is not None:
            self._tmp.cleanup()

    # -- scenario -----------------------------------------------------------------

    def run_scenario(self) -> Simulator:
        simulator = Simulator(self.config)
        post = http_measure_poster(self.agent_api.base_url, PARKING_DEVICE_KEY)
        simulator.run(post, on_weather_poll=self.weather_pipeline.tick_once)
        return simulator

    def quiesce(self, timeout: float = 60.0) -> bool:
        """Poll the delivery queue depth until it reads zero twice in a row."""
        deadline = time.monotonic() + timeout
        zeros = 0
        while time.monotonic() < deadline:
            if self.broker.pending_deliveries() == 0:
                zeros += 1
                if zeros >= 2:
                    if self.analytics is not None:
                        self.analytics.drain()
                    return True
            else:
                zeros = 0
            time.sleep(0.05)
        return False

    def verify(self, simulator: Simulator) -> ConformanceReport:
        if not self.quiesce():
            raise ParkTwinError("stack did not quiesce before verification")
        return verify(simulator.truth, self.broker, dict(self.bulbs.state), self.dataflow.history)
