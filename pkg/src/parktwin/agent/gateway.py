"""Gateway logic: southbound measures in, southbound commands out.

``handle_measure`` turns one Ultralight payload into broker writes: the
base entity upsert from the attribute map, then each matching expansion
rule in order (plain sets as upserts, adjusts as compare-and-set
read-modify-write). ``handle_notification`` turns broker notifications
into actuator commands via the registered routes.

Measures from one sensor are processed in arrival order (per-sensor lock);
distinct sensors proceed concurrently.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

import requests

from parktwin.agent.devices import (
    ActuatorRoute,
    DeviceRegistration,
    DeviceRegistry,
    render_template,
)
from parktwin.agent.ultralight import UlCommand, UlMeasure, parse_measure, render_command
from parktwin.broker.client import BrokerClient
from parktwin.errors import TemplateError, UnknownActuator, UnknownDevice

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WriteRecord:
    """One broker write performed by the gateway."""

    kind: str  # "upsert" | "adjust"
    entity_id: str
    entity_type: str
    attrs: dict

    def as_document(self) -> dict:
        """The write rendered as a keyValues entity document."""
        return {"id": self.entity_id, "type": self.entity_type, **self.attrs}


@dataclass
class CommandRecord:
    command: UlCommand
    url: str
    delivered: bool
    error: str | None = None


class UltralightGateway:
    def __init__(
        self,
        broker: BrokerClient,
        registry: DeviceRegistry | None = None,
        cas_attempts: int = 128,
        cas_backoff: float = 0.002,
        max_concurrent_measures: int = 16,
    ):
        self.broker = broker
        self.registry = registry or DeviceRegistry()
        self.cas_attempts = cas_attempts
        self.cas_backoff = cas_backoff
        self._session = requests.Session()
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._seq_state: dict[str, dict] = {}
        # bounds broker-facing work: sensors may connect in any number, but
        # unbounded parallel processing only multiplies CAS contention
        self._measure_gate = threading.BoundedSemaphore(max_concurrent_measures)
        self.write_log: list[WriteRecord] = []
        self.command_log: list[CommandRecord] = []
        self._log_lock = threading.Lock()

    # -- provisioning ---------------------------------------------------------

    def register_device(self, registration: DeviceRegistration) -> None:
        self.registry.register(registration)

    def add_actuator_route(self, route: ActuatorRoute) -> None:
        self.registry.add_route(route)

    # -- southbound: measures -> context ---------------------------------------

    def handle_measure(
        self, device_key: str, payload: str, sensor_id: str | None = None
    ) -> list[WriteRecord]:
        registration = self.registry.get(device_key)
        if registration is None:
            raise UnknownDevice(f"no registration for device key {device_key!r}")
        measures = parse_measure(payload)
        writes: list[WriteRecord] = []
        with self._measure_gate, self._sensor_lock(device_key, sensor_id):
            for measure in measures:
                writes.extend(self._process_group(registration, measure))
        with self._log_lock:
            self.write_log.extend(writes)
        return writes

    def _process_group(self, reg: DeviceRegistration, measure: UlMeasure) -> list[WriteRecord]:
        variables = measure.as_dict()
        if reg.id_sequence is not None:
            memo_value = variables.get(reg.id_sequence.memo_by)
            if memo_value is None:
                raise TemplateError(
                    f"measure lacks key {reg.id_sequence.memo_by!r} needed for id allocation"
                )
            variables["seq"] = str(self._allocate_seq(reg, memo_value))
        entity_id = render_template(reg.entity_template.id_template, variables)

        writes: list[WriteRecord] = []
        base_attrs = {
            attr_name: variables[key]
            for key, attr_name in reg.attr_map.items()
            if key in variables
        }
        doc = {"id": entity_id, "type": reg.entity_template.type, **base_attrs}
        self.broker.upsert_entity(doc)
        writes.append(WriteRecord("upsert", entity_id, reg.entity_template.type, base_attrs))

        variables["entity_id"] = entity_id
        measure_keys = set(measure.keys())
        for rule in reg.expansion_rules:
            if rule.trigger not in measure_keys:
                continue
            for action in rule.actions:
                target_id = render_template(action.target_id_template, variables)
                if action.set_attrs:
                    attrs = {
                        name: render_template(template, variables)
                        for name, template in action.set_attrs.items()
                    }
                    self.broker.upsert_entity(
                        {"id": target_id, "type": action.target_type, **attrs}
                    )
                    writes.append(WriteRecord("upsert", target_id, action.target_type, attrs))
                if action.adjust is not None:
                    attr_name, delta = action.adjust
                    new_value = self.broker.adjust_number(
                        target_id,
                        attr_name,
                        delta,
                        attempts=self.cas_attempts,
                        backoff_base=self.cas_backoff,
                    )
                    writes.append(
                        WriteRecord("adjust", target_id, action.target_type, {attr_name: new_value})
                    )
        return writes

    def _allocate_seq(self, reg: DeviceRegistration, memo_value: str) -> int:
        with self._locks_guard:
            state = self._seq_state.setdefault(
                reg.device_key, {"next": reg.id_sequence.start, "memo": {}}
            )
            if memo_value not in state["memo"]:
                state["memo"][memo_value] = state["next"]
                state["next"] += 1
            return state["memo"][memo_value]

    def _sensor_lock(self, device_key: str, sensor_id: str | None) -> threading.Lock:
        key = f"{device_key}/{sensor_id or ''}"
        with self._locks_guard:
            lock = self._locks.get(key)
            if lock is None:
                lock = self._locks[key] = threading.Lock()
            return lock

    # -- northbound: notifications -> commands ----------------------------------

    def handle_notification(self, body: dict) -> list[UlCommand]:
        sent: list[UlCommand] = []
        for doc in body.get("data", []):
            entity_type = doc.get("type", "")
            for route in self.registry.routes_for(entity_type):
                try:
                    command = self._route_command(route, doc)
                except UnknownActuator:
                    continue
                if command is not None:
                    self._send_command(command, route.southbound_url)
                    sent.append(command)
            # singleton actuators registered with a commands map: the raw
            # attribute value travels as the command value
            for device in self.registry.command_devices_for(doc.get("id", "")):
                if device.southbound_url is None:
                    logger.warning("device %s has commands but no southbound URL", device.device_key)
                    continue
                for command_name, attr_name in device.commands.items():
                    if attr_name in doc:
                        command = UlCommand(device.device_key, command_name, str(doc[attr_name]))
                        self._send_command(command, device.southbound_url)
                        sent.append(command)
        return sent

    def _route_command(self, route: ActuatorRoute, doc: dict) -> UlCommand | None:
        if route.watch_attr not in doc:
            return None
        raw = doc[route.watch_attr]
        value = route.value_map.get(raw)
        if value is None:
            logger.warning(
                "no command value for %s=%r on %s; skipped", route.watch_attr, raw, doc.get("id")
            )
            return None
        entity_id = doc.get("id", "")
        suffix = entity_id.split(":", 1)[1] if ":" in entity_id else entity_id
        variables = {"id": entity_id, "id_suffix": suffix, "name": str(doc.get("name", suffix))}
        try:
            device_id = render_template(route.device_id_template, variables)
        except TemplateError as exc:
            logger.warning("actuator mapping failed for %s: %s; skipped", entity_id, exc)
            raise UnknownActuator(str(exc))
        return UlCommand(device_id, route.command, value)

    def _send_command(self, command: UlCommand, url: str) -> None:
        text = render_command(command)
        record = CommandRecord(command, url, delivered=False)
        try:
            response = self._session.post(
                url, data=text.encode("utf-8"), headers={"Content-Type": "text/plain"}, timeout=10
            )
            record.delivered = 200 <= response.status_code < 300
            if not record.delivered:
                record.error = f"HTTP {response.status_code}"
        except requests.RequestException as exc:
            record.error = type(exc).__name__
        with self._log_lock:
            self.command_log.append(record)
        if record.error:
            logger.warning("command %s to %s failed: %s", text, url, record.error)
