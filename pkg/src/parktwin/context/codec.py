"""Canonical JSON encodings of context entities.

Two representations exist: the compact ``keyValues`` form used on the wire
(bare name/value pairs, as in device payload snippets) and the ``normalized``
internal form where each attribute is an object with type, value, and
metadata. ``normalize``/``render`` convert between documents and entities
and round-trip exactly.
"""

from __future__ import annotations

from typing import Any

from parktwin.context import model
from parktwin.context.model import Attribute, ContextEntity
from parktwin.errors import MalformedEntity

KEY_VALUES = "keyValues"
NORMALIZED = "normalized"


def infer_type(name: str, value: Any) -> str:
    """Semantic type inferred for a bare keyValues attribute.

    Fixed rules: bool -> Boolean, number -> Number, ISO-8601 string ->
    DateTime, entity-id string under a "ref"-prefixed name -> Relationship,
    other string -> Text, object or array -> StructuredValue.
    """
    if isinstance(value, bool):
        return model.BOOLEAN
    if isinstance(value, (int, float)):
        return model.NUMBER
    if isinstance(value, str):
        if _is_ref_name(name) and model.looks_like_entity_id(value):
            return model.RELATIONSHIP
        if model.is_iso_utc(value):
            return model.DATETIME
        return model.TEXT
    if isinstance(value, (dict, list)):
        return model.STRUCTURED
    if value is None:
        return model.TEXT
    raise MalformedEntity(f"unsupported JSON value for attribute {name!r}: {value!r}")


def _is_ref_name(name: str) -> bool:
    return len(name) > 3 and name.startswith("ref") and name[3].isupper()


def normalize(document: dict, representation: str = KEY_VALUES) -> ContextEntity:
    """Parse an entity document in the given representation."""
    if not isinstance(document, dict):
        raise MalformedEntity("entity document must be a JSON object")
    if "id" not in document or "type" not in document:
        raise MalformedEntity("entity document requires 'id' and 'type'")
    entity_id = document["id"]
    entity_type = document["type"]
    if not isinstance(entity_id, str):
        raise MalformedEntity("entity id must be a string")

    attrs: dict[str, Attribute] = {}
    for name, raw in document.items():
        if name in ("id", "type"):
            continue
        if representation == KEY_VALUES:
            attrs[name] = Attribute(infer_type(name, raw), raw)
        elif representation == NORMALIZED:
            attrs[name] = _attr_from_normalized(name, raw)
        else:
            raise MalformedEntity(f"unknown representation {representation!r}")
    return ContextEntity(entity_id, entity_type, attrs)


def _attr_from_normalized(name: str, raw: Any) -> Attribute:
    if not isinstance(raw, dict) or "type" not in raw or "value" not in raw:
        raise MalformedEntity(f"normalized attribute {name!r} requires 'type' and 'value'")
    metadata = raw.get("metadata", {})
    if not isinstance(metadata, dict):
        raise MalformedEntity(f"attribute {name!r} metadata must be an object")
    return Attribute(raw["type"], raw["value"], metadata)


def render(entity: ContextEntity, representation: str = KEY_VALUES) -> dict:
    """Render an entity as a JSON document in the given representation."""
    doc: dict[str, Any] = {"id": entity.id, "type": entity.type}
    for name, attr in entity.attributes.items():
        if representation == KEY_VALUES:
            doc[name] = attr.value
        elif representation == NORMALIZED:
            doc[name] = attr.to_normalized()
        else:
            raise MalformedEntity(f"unknown representation {representation!r}")
    return doc


def parse_attrs(document: dict, representation: str = KEY_VALUES) -> dict[str, Attribute]:
    """Parse a bare attribute map (no id/type), e.g. an update request body."""
    if not isinstance(document, dict):
        raise MalformedEntity("attribute document must be a JSON object")
    attrs: dict[str, Attribute] = {}
    for name, raw in document.items():
        if name in model.RESERVED_NAMES:
            raise MalformedEntity(f"attribute name {name!r} is reserved")
        if representation == KEY_VALUES:
            attrs[name] = Attribute(infer_type(name, raw), raw)
        else:
            attrs[name] = _attr_from_normalized(name, raw)
    return attrs
