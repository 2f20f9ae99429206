"""Self-hosted full stack for interactive use and frontend integration tests.

Boots every service on ephemeral ports (unless configured), prints one JSON
line with the service URLs, and serves until terminated.

    python3 -m parktwin.sim.devstack [--config scenario.json] [--run-scenario]
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import threading

from parktwin.sim.scenario import ScenarioConfig
from parktwin.sim.stack import TwinStack


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="devstack")
    parser.add_argument("--config", help="scenario config JSON")
    parser.add_argument("--run-scenario", action="store_true", help="drive the scenario once after boot")
    parser.add_argument("--no-auth", action="store_true")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)

    config = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    stack = TwinStack(config, with_auth=not args.no_auth).start()
    urls = {
        "broker": stack.broker_api.base_url,
        "agent": stack.agent_api.base_url,
        "dataflow": stack.dataflow.service.base_url,
        "analytics": stack.analytics.service.base_url,
        "weather": stack.weather.service.base_url,
        "bulbs": stack.bulbs.service.base_url,
    }
    if stack.identity_api is not None:
        urls["identity"] = stack.identity_api.base_url
        urls["proxy"] = stack.proxy.base_url
    print(json.dumps(urls), flush=True)

    if args.run_scenario:
        simulator = stack.run_scenario()
        stack.quiesce()
        print(json.dumps({"events": len(simulator.truth.event_log)}), flush=True)

    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda *a: stop.set())
    signal.signal(signal.SIGTERM, lambda *a: stop.set())
    stop.wait()
    stack.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
