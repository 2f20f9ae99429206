"""Console entry points for the services and the simulation harness."""

from __future__ import annotations

import argparse
import json
import logging
import signal
import threading
from pathlib import Path

logger = logging.getLogger(__name__)


def _setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s",
    )


def _serve_until_interrupt(on_shutdown=None) -> None:
    stop = threading.Event()

    def handle(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, handle)
    signal.signal(signal.SIGTERM, handle)
    stop.wait()
    if on_shutdown is not None:
        on_shutdown()


def broker_main(argv=None) -> int:
    from parktwin.broker.api import BrokerApi
    from parktwin.broker.core import ContextBroker

    parser = argparse.ArgumentParser(prog="broker", description="Latest-state context broker")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=1026)
    parser.add_argument("--retries", type=int, default=3, help="notification delivery retries")
    parser.add_argument("--backoff-base", type=float, default=0.1, help="retry backoff base seconds")
    parser.add_argument("--snapshot", help="snapshot file loaded on start, written on shutdown")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    broker = ContextBroker(retries=args.retries, backoff_base=args.backoff_base)
    if args.snapshot and Path(args.snapshot).exists():
        count = broker.store.load_snapshot(args.snapshot)
        logger.info("loaded %d entities from snapshot", count)
    api = BrokerApi(broker, host=args.host, port=args.port).start()
    logger.info("broker ready at %s", api.base_url)
    _serve_until_interrupt(lambda: (broker.shutdown(args.snapshot), api.stop()))
    return 0


def agent_main(argv=None) -> int:
    from parktwin.agent.api import AgentApi
    from parktwin.agent.devices import DeviceRegistry
    from parktwin.agent.gateway import UltralightGateway
    from parktwin.broker.client import BrokerClient

    parser = argparse.ArgumentParser(prog="agent", description="Ultralight 2.0 IoT gateway")
    parser.add_argument("--config", required=True, help="agent config JSON")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    registry = DeviceRegistry.from_json(config.get("devices", {}))
    gateway = UltralightGateway(
        BrokerClient(config["broker"]),
        registry,
        cas_attempts=config.get("casAttempts", 10),
    )
    api = AgentApi(gateway, host=config.get("host", "127.0.0.1"), port=config.get("port", 4061)).start()
    if config.get("subscribeSpotStatus", True):
        BrokerClient(config["broker"]).create_subscription(
            {
                "subject": {"entities": [{"type": "ParkingSpot"}], "condition": {"attrs": ["status"]}},
                "notification": {"url": api.base_url + "/notify"},
            }
        )
    logger.info("agent ready at %s", api.base_url)
    _serve_until_interrupt(api.stop)
    return 0


def dataflow_main(argv=None) -> int:
    from parktwin.broker.client import BrokerClient
    from parktwin.dataflow.api import DataflowService
    from parktwin.dataflow.history import HistoryStore
    from parktwin.dataflow.pipeline import PipelineRunner, PipelineSpec

    parser = argparse.ArgumentParser(prog="dataflow", description="Pipelines and persistence")
    parser.add_argument("--config", required=True, help="pipeline config JSON (list of pipelines)")
    parser.add_argument("--history", required=True, help="history ndjson path")
    parser.add_argument("--broker", help="broker URL for the persistence subscription")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    pipeline_docs = raw if isinstance(raw, list) else raw.get("pipelines", [])
    broker_url = args.broker or (None if isinstance(raw, list) else raw.get("broker"))

    service = DataflowService(HistoryStore(args.history)).start()
    runners = [PipelineRunner(PipelineSpec.from_json(doc)).start() for doc in pipeline_docs]
    if broker_url:
        service.attach(BrokerClient(broker_url))
    elif pipeline_docs:
        service.attach(BrokerClient(pipeline_docs[0]["sink"]["brokerUrl"]))
    logger.info("dataflow listening at %s with %d pipelines", service.notify_url, len(runners))

    def shutdown():
        for runner in runners:
            runner.stop()
        service.stop()

    _serve_until_interrupt(shutdown)
    return 0


def analytics_main(argv=None) -> int:
    from parktwin.analytics.worker import AnalyticsWorker
    from parktwin.broker.client import BrokerClient
    from parktwin.dataflow.history import HistoryStore

    parser = argparse.ArgumentParser(prog="analytics", description="Occupancy analytics worker")
    parser.add_argument("--broker", required=True)
    parser.add_argument("--history", help="warm-start training from this history file")
    parser.add_argument("--total-spots", type=int, required=True)
    parser.add_argument("--weather-coefficient", type=float, default=0.0)
    parser.add_argument("--publish-every", type=float, default=60.0, help="seconds between forecasts")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    worker = AnalyticsWorker(
        BrokerClient(args.broker),
        total_spots=args.total_spots,
        weather_coefficient=args.weather_coefficient,
    ).start()
    worker.attach()
    if args.history and Path(args.history).exists():
        samples = _occupancy_samples(HistoryStore(args.history), args.total_spots)
        if samples:
            from parktwin.analytics.forecast import train

            worker.model = train(samples, args.weather_coefficient)
            logger.info("warm-started model from %d samples", len(samples))

    stop = threading.Event()

    def publish_loop():
        while not stop.wait(args.publish_every):
            worker.train_from_samples()
            hour = worker.clock.now().hour
            next_hour = (hour + 1) % 24
            worker.publish_forecast(worker.forecast_for(next_hour), next_hour)

    thread = threading.Thread(target=publish_loop, daemon=True)
    thread.start()
    logger.info("analytics listening at %s", worker.notify_url)
    _serve_until_interrupt(lambda: (stop.set(), worker.stop()))
    return 0


def _occupancy_samples(history, total_spots: int) -> list[tuple[str, int]]:
    """Fold spot-status records into (timestamp, occupiedCount) samples."""
    status: dict[str, str] = {}
    occupied = 0
    samples: list[tuple[str, int]] = []
    for record in history.records():
        if record.entity_type != "ParkingSpot":
            continue
        new = record.attrs.get("status")
        if new not in ("free", "occupied", "closed"):
            continue
        old = status.get(record.entity_id, "free")
        occupied += (new == "occupied") - (old == "occupied")
        status[record.entity_id] = new
        samples.append((record.received_at, occupied))
    return samples


def auth_main(argv=None) -> int:
    from parktwin.auth.identity import IdentityService
    from parktwin.auth.identity_api import IdentityApi
    from parktwin.auth.policy import PolicyTable, default_policy
    from parktwin.auth.proxy import HttpIntrospector, PepProxy

    parser = argparse.ArgumentParser(prog="auth-stack", description="Identity service + enforcement proxy")
    parser.add_argument("--upstream", required=True, help="broker URL the proxy forwards to")
    parser.add_argument("--users", help="subjects config JSON")
    parser.add_argument("--policy", help="role/permission/alias config JSON")
    parser.add_argument("--token-ttl", type=float, default=3600.0)
    parser.add_argument("--identity-port", type=int, default=3005)
    parser.add_argument("--proxy-port", type=int, default=1027)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    if args.users:
        identity = IdentityService.from_config_file(args.users)
    else:
        identity = IdentityService(token_ttl=args.token_ttl)
    identity_api = IdentityApi(identity, host=args.host, port=args.identity_port).start()
    policy = PolicyTable.from_file(args.policy) if args.policy else default_policy()
    proxy = PepProxy(
        upstream_url=args.upstream,
        introspect=HttpIntrospector(identity_api.base_url),
        policy=policy,
        identity_hint_url=identity_api.base_url,
        host=args.host,
        port=args.proxy_port,
    ).start()
    logger.info("identity at %s, proxy at %s", identity_api.base_url, proxy.base_url)
    _serve_until_interrupt(lambda: (proxy.stop(), identity_api.stop()))
    return 0


def sim_main(argv=None) -> int:
    from parktwin.broker.client import BrokerClient
    from parktwin.dataflow.history import HistoryStore
    from parktwin.sim.scenario import ScenarioConfig
    from parktwin.sim.stack import TwinStack
    from parktwin.sim.verify import verify

    parser = argparse.ArgumentParser(prog="parking-sim", description="Scenario driver and verifier")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario against a self-hosted stack and verify it")
    run.add_argument("--config", help="scenario config JSON")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--report", help="write the conformance report here")
    run.add_argument("--history", help="write the history log here (default: temp)")
    run.add_argument("--truth", help="write ground truth JSON here")
    run.add_argument("--bulbs", help="write final bulb state JSON here")
    run.add_argument("--no-auth", action="store_true")
    run.add_argument("-v", "--verbose", action="store_true")

    check = sub.add_parser("verify", help="re-verify saved artifacts against a running broker")
    check.add_argument("--truth", required=True)
    check.add_argument("--broker", required=True)
    check.add_argument("--history", required=True)
    check.add_argument("--bulbs", required=True)
    check.add_argument("--report")
    check.add_argument("-v", "--verbose", action="store_true")

    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    if args.command == "run":
        config = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
        if args.seed is not None:
            config = ScenarioConfig(**{**config.__dict__, "seed": args.seed})
        stack = TwinStack(config, history_path=args.history, with_auth=not args.no_auth).start()
        try:
            simulator = stack.run_scenario()
            report = stack.verify(simulator)
            if args.truth:
                Path(args.truth).write_text(json.dumps(_truth_json(simulator.truth), indent=2))
            if args.bulbs:
                Path(args.bulbs).write_text(json.dumps(dict(stack.bulbs.state), indent=2))
            if args.report:
                report.save(args.report)
            print(json.dumps(report.to_json(), indent=2))
            return 0 if report.passed else 1
        finally:
            stack.stop()

    truth = _truth_from_json(json.loads(Path(args.truth).read_text(encoding="utf-8")))
    bulbs = json.loads(Path(args.bulbs).read_text(encoding="utf-8"))
    report = verify(truth, BrokerClient(args.broker), bulbs, HistoryStore(args.history))
    if args.report:
        report.save(args.report)
    print(json.dumps(report.to_json(), indent=2))
    return 0 if report.passed else 1


def _truth_json(truth) -> dict:
    return {
        "totalSpots": truth.total_spots,
        "occupied": {str(k): v for k, v in truth.occupied.items()},
        "free": sorted(truth.free),
        "closed": sorted(truth.closed),
        "eventLog": [list(e) for e in truth.event_log],
    }


def _truth_from_json(doc: dict):
    from parktwin.sim.scenario import GroundTruth

    return GroundTruth(
        total_spots=doc["totalSpots"],
        occupied={int(k): v for k, v in doc["occupied"].items()},
        free=set(doc["free"]),
        closed=set(doc["closed"]),
        event_log=[tuple(e) for e in doc.get("eventLog", [])],
    )
