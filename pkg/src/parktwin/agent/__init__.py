"""Bidirectional Ultralight 2.0 gateway."""

from parktwin.agent.ultralight import (
    UlCommand,
    UlMeasure,
    parse_command,
    parse_measure,
    render_command,
    render_measure,
)
from parktwin.agent.devices import (
    ActuatorRoute,
    DeviceRegistration,
    DeviceRegistry,
    EntityTemplate,
    ExpansionAction,
    ExpansionRule,
    IdSequence,
)
from parktwin.agent.gateway import UltralightGateway

__all__ = [
    "UlCommand",
    "UlMeasure",
    "parse_command",
    "parse_measure",
    "render_command",
    "render_measure",
    "ActuatorRoute",
    "DeviceRegistration",
    "DeviceRegistry",
    "EntityTemplate",
    "ExpansionAction",
    "ExpansionRule",
    "IdSequence",
    "UltralightGateway",
]
