"""Ultralight 2.0 text codec.

Measures are pipe-separated key/value pairs, multiple groups separated by
'#' (e.g. ``id|123456|t|car|p|51``). Commands are ``deviceId@command|value``
(e.g. ``bulb:0051@light|yellow``). parse and render are exact inverses on
well-formed values.
"""

from __future__ import annotations

from dataclasses import dataclass

from parktwin.errors import MalformedCommand, MalformedPayload

GROUP_SEP = "#"
PAIR_SEP = "|"


@dataclass(frozen=True)
class UlMeasure:
    """One measure group: an ordered list of (key, value) pairs."""

    pairs: tuple[tuple[str, str], ...]

    def get(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.pairs:
            if k == key:
                return v
        return default

    def keys(self) -> list[str]:
        return [k for k, _ in self.pairs]

    def as_dict(self) -> dict[str, str]:
        return dict(self.pairs)


@dataclass(frozen=True)
class UlCommand:
    device_id: str
    command: str
    value: str


def parse_measure(text: str) -> list[UlMeasure]:
    """Split a payload into measure groups, preserving pair order."""
    if text == "":
        return []
    measures = []
    for group in text.split(GROUP_SEP):
        tokens = group.split(PAIR_SEP)
        if len(tokens) % 2 != 0:
            raise MalformedPayload(f"odd token count in group {group!r}")
        pairs = []
        for i in range(0, len(tokens), 2):
            key, value = tokens[i], tokens[i + 1]
            if not key:
                raise MalformedPayload(f"empty key in group {group!r}")
            pairs.append((key, value))
        measures.append(UlMeasure(tuple(pairs)))
    return measures


def render_measure(measures: list[UlMeasure] | UlMeasure) -> str:
    if isinstance(measures, UlMeasure):
        measures = [measures]
    groups = []
    for measure in measures:
        for key, value in measure.pairs:
            if not key:
                raise MalformedPayload("empty measure key")
            if GROUP_SEP in key or PAIR_SEP in key or GROUP_SEP in value or PAIR_SEP in value:
                raise MalformedPayload(f"separator character in pair ({key!r}, {value!r})")
        groups.append(PAIR_SEP.join(token for pair in measure.pairs for token in pair))
    return GROUP_SEP.join(groups)


def parse_command(text: str) -> UlCommand:
    device_id, at, rest = text.partition("@")
    if not at or not device_id:
        raise MalformedCommand(f"missing '@' separator in {text!r}")
    command, bar, value = rest.partition(PAIR_SEP)
    if not bar or not command:
        raise MalformedCommand(f"missing '|' separator in {text!r}")
    return UlCommand(device_id, command, value)


def render_command(cmd: UlCommand) -> str:
    if not cmd.device_id or not cmd.command or not cmd.value:
        raise MalformedCommand("command fields must be non-empty")
    if "@" in cmd.device_id:
        raise MalformedCommand(f"'@' not allowed in device id {cmd.device_id!r}")
    if PAIR_SEP in cmd.command:
        raise MalformedCommand(f"'|' not allowed in command name {cmd.command!r}")
    return f"{cmd.device_id}@{cmd.command}{PAIR_SEP}{cmd.value}"
