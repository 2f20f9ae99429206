"""Context entities: typed identity plus an attribute map.

An entity is the unit of state held by the broker. Each attribute carries a
semantic type label, a JSON value, and a metadata map that is always present
(possibly empty) in the normalized form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping

from parktwin.clock import parse_iso_utc
from parktwin.errors import MalformedAttribute, MalformedEntity

# Semantic type labels used by the built-in models.
TEXT = "Text"
NUMBER = "Number"
BOOLEAN = "Boolean"
DATETIME = "DateTime"
STRUCTURED = "StructuredValue"
RELATIONSHIP = "Relationship"

RESERVED_NAMES = frozenset({"id", "type"})

# URN-like entity ids: at least one ':' separating non-blank segments.
ENTITY_ID_RE = re.compile(r"^[^\s:]+:\S+$")

_CONTROL_OR_SPACE_RE = re.compile(r"[\s\x00-\x1f\x7f]")


def _check_identifier(value: Any, what: str) -> str:
    if not isinstance(value, str):
        raise MalformedEntity(f"{what} must be a string, got {type(value).__name__}")
    if not value:
        raise MalformedEntity(f"{what} must be non-empty")
    if _CONTROL_OR_SPACE_RE.search(value):
        raise MalformedEntity(f"{what} contains whitespace or control characters: {value!r}")
    return value


def looks_like_entity_id(value: Any) -> bool:
    return isinstance(value, str) and bool(ENTITY_ID_RE.match(value))


def is_iso_utc(value: Any) -> bool:
    """True when the value is an ISO-8601 timestamp string (with timezone)."""
    if not isinstance(value, str) or "T" not in value:
        return False
    try:
        parse_iso_utc(value)
        return True
    except ValueError:
        return False


@dataclass(frozen=True)
class Attribute:
    """A single entity attribute: semantic type, JSON value, metadata.

    Invariants enforced on construction: a ``Number`` attribute holds a
    numeric value and a ``DateTime`` attribute holds an ISO-8601 UTC string.
    """

    type: str
    value: Any
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.type or not isinstance(self.type, str):
            raise MalformedAttribute("attribute type label must be a non-empty string")
        if self.type == NUMBER and not _is_number(self.value):
            raise MalformedAttribute(f"Number attribute holds non-numeric value {self.value!r}")
        if self.type == DATETIME and not is_iso_utc(self.value):
            raise MalformedAttribute(f"DateTime attribute does not parse as ISO-8601 UTC: {self.value!r}")
        object.__setattr__(self, "metadata", dict(self.metadata))

    def to_normalized(self) -> dict:
        return {"type": self.type, "value": self.value, "metadata": dict(self.metadata)}


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class ContextEntity:
    """Typed, identified object with an attribute map."""

    id: str
    type: str
    attributes: Mapping[str, Attribute] = field(default_factory=dict)

    def __post_init__(self):
        _check_identifier(self.id, "entity id")
        _check_identifier(self.type, "entity type")
        attrs = dict(self.attributes)
        for name in attrs:
            if name in RESERVED_NAMES:
                raise MalformedEntity(f"attribute name {name!r} is reserved")
            if not name:
                raise MalformedEntity("attribute names must be non-empty")
        object.__setattr__(self, "attributes", attrs)

    def with_attrs(self, updates: Mapping[str, Attribute]) -> "ContextEntity":
        """Copy with the given attributes replaced or appended."""
        merged = dict(self.attributes)
        merged.update(updates)
        return ContextEntity(self.id, self.type, merged)

    def attr_value(self, name: str, default: Any = None) -> Any:
        attr = self.attributes.get(name)
        return attr.value if attr is not None else default
