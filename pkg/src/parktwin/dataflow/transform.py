"""Declarative JSON-to-entity mapping.

A MappingSpec extracts dotted source paths from an incoming document, casts
them, and writes them to (at most one level nested) target attributes, plus
constants and a templated entity id. The clock value is injected so the
transform is a pure function of (mapping, document, time); ``{clock_hour}``,
``{clock_hour_start}`` and ``{clock_hour_end}`` expose the poll hour to
templates, formatted the way the forecast model expects
(e.g. ``2020-08-03T09:00:00.00Z``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Any

from parktwin.agent.devices import render_template
from parktwin.clock import parse_iso_utc
from parktwin.errors import MissingSourcePath, TemplateError

_HOUR_START_FMT = "%Y-%m-%dT%H:00:00.00Z"


@dataclass(frozen=True)
class FieldMap:
    source_path: str
    target_attr: str
    cast: str | None = None
    optional: bool = False


@dataclass(frozen=True)
class MappingSpec:
    target_type: str
    id_template: str
    field_maps: tuple[FieldMap, ...] = ()
    constants: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_json(cls, doc: dict) -> "MappingSpec":
        return cls(
            target_type=doc["targetType"],
            id_template=doc["idTemplate"],
            field_maps=tuple(
                FieldMap(
                    source_path=raw["sourcePath"],
                    target_attr=raw["targetAttr"],
                    cast=raw.get("cast"),
                    optional=bool(raw.get("optional", False)),
                )
                for raw in doc.get("fieldMaps", [])
            ),
            constants=dict(doc.get("constants", {})),
        )


def resolve_path(doc: Any, dotted: str) -> tuple[bool, Any]:
    node = doc
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return False, None
        node = node[part]
    return True, node


def _cast(value: Any, cast: str | None, path: str) -> Any:
    if cast is None:
        return value
    if cast == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise TemplateError(f"cannot cast {value!r} at {path} to number")
        try:
            return value if isinstance(value, (int, float)) else float(value)
        except ValueError:
            raise TemplateError(f"cannot cast {value!r} at {path} to number")
    if cast == "text":
        return str(value)
    if cast == "datetime":
        parse_iso_utc(str(value))
        return str(value)
    raise TemplateError(f"unknown cast {cast!r}")


def clock_variables(now: datetime) -> dict[str, str]:
    hour = now.astimezone(timezone.utc).replace(minute=0, second=0, microsecond=0)
    return {
        "clock_hour": hour.strftime("%Y-%m-%dT%H"),
        "clock_hour_start": hour.strftime(_HOUR_START_FMT),
        "clock_hour_end": (hour + timedelta(hours=1)).strftime(_HOUR_START_FMT),
    }


def transform(mapping: MappingSpec, doc: dict, now: datetime) -> dict:
    """Produce a keyValues entity document from a source document."""
    variables = clock_variables(now)
    attrs: dict[str, Any] = {}
    for fm in mapping.field_maps:
        found, raw = resolve_path(doc, fm.source_path)
        if not found:
            if fm.optional:
                continue
            raise MissingSourcePath(f"source path {fm.source_path!r} absent from document")
        value = _cast(raw, fm.cast, fm.source_path)
        _assign(attrs, fm.target_attr, value)
        if isinstance(value, (str, int, float)) and "." not in fm.target_attr:
            variables.setdefault(fm.target_attr, str(value))
    for name, constant in mapping.constants.items():
        value = render_template(constant, variables) if isinstance(constant, str) else constant
        _assign(attrs, name, value)
    entity_id = render_template(mapping.id_template, variables)
    if not entity_id:
        raise TemplateError("id template rendered an empty entity id")
    return {"id": entity_id, "type": mapping.target_type, **attrs}


def _assign(attrs: dict, target: str, value: Any) -> None:
    head, dot, rest = target.partition(".")
    if not dot:
        attrs[target] = value
        return
    if "." in rest:
        raise TemplateError(f"target attribute {target!r} nests more than one level")
    nested = attrs.setdefault(head, {})
    if not isinstance(nested, dict):
        raise TemplateError(f"target attribute {head!r} is both scalar and nested")
    nested[rest] = value
