"""Device registrations: measure mapping, expansion rules, actuator routes.

A registration maps one southbound device key onto a base entity template
plus an ordered list of expansion rules, each of which fans a trigger key
out into further entity writes (plain attribute sets or numeric adjusts).
Actuator routes map northbound entity changes back onto southbound command
targets.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from parktwin.errors import MalformedPayload, TemplateError

_PLACEHOLDER_RE = re.compile(r"\{([a-zA-Z_][a-zA-Z0-9_]*)(:[^}]*)?\}")


def render_template(template: str, variables: dict[str, str]) -> str:
    """Substitute ``{key}`` / ``{key:spec}`` placeholders; unknown key raises."""

    def substitute(match: re.Match) -> str:
        key, spec = match.group(1), match.group(2) or ""
        if key not in variables:
            raise TemplateError(f"template {template!r} references unknown key {key!r}")
        return format(variables[key], spec[1:]) if spec else variables[key]

    return _PLACEHOLDER_RE.sub(substitute, template)


def template_keys(template: str) -> set[str]:
    return {m.group(1) for m in _PLACEHOLDER_RE.finditer(template)}


@dataclass(frozen=True)
class EntityTemplate:
    id_template: str
    type: str


@dataclass(frozen=True)
class IdSequence:
    """Sequential id allocation for the base entity, memoized by a measure key.

    The same memo value (e.g. a plate number) always yields the same
    sequence number, so repeat arrivals reuse their entity id.
    """

    start: int
    memo_by: str


@dataclass(frozen=True)
class ExpansionAction:
    target_id_template: str
    target_type: str
    set_attrs: dict[str, str] = field(default_factory=dict)
    adjust: Optional[tuple[str, int]] = None

    def __post_init__(self):
        if self.adjust is not None:
            attr, delta = self.adjust
            if not isinstance(delta, int) or delta == 0:
                raise MalformedPayload(f"adjust delta must be a non-zero integer, got {delta!r}")
            if not attr:
                raise MalformedPayload("adjust attribute name must be non-empty")


@dataclass(frozen=True)
class ExpansionRule:
    trigger: str
    actions: tuple[ExpansionAction, ...]


# Template variables beyond the measure keys of the trigger group.
SPECIAL_TEMPLATE_KEYS = frozenset({"entity_id"})


@dataclass(frozen=True)
class DeviceRegistration:
    device_key: str
    entity_template: EntityTemplate
    attr_map: dict[str, str] = field(default_factory=dict)
    commands: dict[str, str] = field(default_factory=dict)
    expansion_rules: tuple[ExpansionRule, ...] = ()
    id_sequence: Optional[IdSequence] = None
    southbound_url: Optional[str] = None

    def __post_init__(self):
        if not self.device_key:
            raise MalformedPayload("deviceKey must be non-empty")
        if not self.entity_template.id_template:
            raise MalformedPayload("entity idTemplate must render a non-empty id")
        names = list(self.attr_map.values())
        if len(set(names)) != len(names):
            raise MalformedPayload("attrMap target attribute names must be unique")
        if self.commands and template_keys(self.entity_template.id_template):
            raise MalformedPayload(
                "a registration with commands needs a literal entity id, not a template"
            )

    @classmethod
    def from_json(cls, doc: dict) -> "DeviceRegistration":
        template = doc.get("entityTemplate") or {}
        seq = doc.get("idSequence")
        rules = []
        for raw_rule in doc.get("expansionRules", []):
            actions = []
            for raw in raw_rule.get("actions", []):
                adjust = None
                if raw.get("adjust"):
                    adjust = (raw["adjust"]["attrName"], int(raw["adjust"]["delta"]))
                actions.append(
                    ExpansionAction(
                        target_id_template=raw["targetIdTemplate"],
                        target_type=raw["targetType"],
                        set_attrs=dict(raw.get("setAttrs", {})),
                        adjust=adjust,
                    )
                )
            rules.append(ExpansionRule(raw_rule["trigger"], tuple(actions)))
        return cls(
            device_key=doc["deviceKey"],
            entity_template=EntityTemplate(template["idTemplate"], template["type"]),
            attr_map=dict(doc.get("attrMap", {})),
            commands=dict(doc.get("commands", {})),
            expansion_rules=tuple(rules),
            id_sequence=IdSequence(int(seq["start"]), seq["memoBy"]) if seq else None,
            southbound_url=doc.get("southboundUrl"),
        )

    def to_json(self) -> dict:
        doc = {
            "deviceKey": self.device_key,
            "entityTemplate": {
                "idTemplate": self.entity_template.id_template,
                "type": self.entity_template.type,
            },
            "attrMap": dict(self.attr_map),
            "commands": dict(self.commands),
            "expansionRules": [
                {
                    "trigger": rule.trigger,
                    "actions": [
                        {
                            "targetIdTemplate": action.target_id_template,
                            "targetType": action.target_type,
                            "setAttrs": dict(action.set_attrs),
                            **(
                                {"adjust": {"attrName": action.adjust[0], "delta": action.adjust[1]}}
                                if action.adjust
                                else {}
                            ),
                        }
                        for action in rule.actions
                    ],
                }
                for rule in self.expansion_rules
            ],
        }
        if self.id_sequence:
            doc["idSequence"] = {"start": self.id_sequence.start, "memoBy": self.id_sequence.memo_by}
        if self.southbound_url:
            doc["southboundUrl"] = self.southbound_url
        return doc


@dataclass(frozen=True)
class ActuatorRoute:
    """Maps an entity change to a southbound command.

    The device id template renders over {id, id_suffix, name}; the value map
    is a total function from the watched attribute's values to command
    values (for parking spots: closed->red, occupied->yellow, free->green).
    """

    entity_type: str
    watch_attr: str
    command: str
    device_id_template: str
    value_map: dict[str, str]
    southbound_url: str

    @classmethod
    def from_json(cls, doc: dict) -> "ActuatorRoute":
        return cls(
            entity_type=doc["entityType"],
            watch_attr=doc.get("watchAttr", "status"),
            command=doc["command"],
            device_id_template=doc["deviceIdTemplate"],
            value_map=dict(doc["valueMap"]),
            southbound_url=doc["southboundUrl"],
        )

    def to_json(self) -> dict:
        return {
            "entityType": self.entity_type,
            "watchAttr": self.watch_attr,
            "command": self.command,
            "deviceIdTemplate": self.device_id_template,
            "valueMap": dict(self.value_map),
            "southboundUrl": self.southbound_url,
        }


class DeviceRegistry:
    """Thread-safe registration store with JSON file round-tripping."""

    def __init__(self):
        self._devices: dict[str, DeviceRegistration] = {}
        self._routes: list[ActuatorRoute] = []
        self._lock = threading.Lock()

    def register(self, registration: DeviceRegistration) -> None:
        from parktwin.errors import DuplicateDevice

        with self._lock:
            if registration.device_key in self._devices:
                raise DuplicateDevice(f"device key {registration.device_key!r} already registered")
            self._devices[registration.device_key] = registration

    def get(self, device_key: str) -> DeviceRegistration | None:
        with self._lock:
            return self._devices.get(device_key)

    def add_route(self, route: ActuatorRoute) -> None:
        with self._lock:
            self._routes.append(route)

    def routes_for(self, entity_type: str) -> list[ActuatorRoute]:
        with self._lock:
            return [r for r in self._routes if r.entity_type == entity_type]

    def command_devices_for(self, entity_id: str) -> list[DeviceRegistration]:
        """Registrations with commands whose (literal) entity id matches."""
        with self._lock:
            return [
                d
                for d in self._devices.values()
                if d.commands and d.entity_template.id_template == entity_id
            ]

    def to_json(self) -> dict:
        with self._lock:
            return {
                "devices": [d.to_json() for d in self._devices.values()],
                "actuatorRoutes": [r.to_json() for r in self._routes],
            }

    @classmethod
    def from_json(cls, doc: dict) -> "DeviceRegistry":
        registry = cls()
        for raw in doc.get("devices", []):
            registry.register(DeviceRegistration.from_json(raw))
        for raw in doc.get("actuatorRoutes", []):
            registry.add_route(ActuatorRoute.from_json(raw))
        return registry

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DeviceRegistry":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
