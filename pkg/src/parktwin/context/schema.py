"""Schema definitions and validation for the built-in data models.

Schemas are extensible: a registry loads one JSON document per entity type
from a directory, and entities of unregistered types pass validation
trivially. The four parking-twin models ship as package data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

from parktwin.context.model import ContextEntity, looks_like_entity_id
from parktwin.errors import MalformedEntity, SchemaMismatch

# Optional hook for dangling-reference checks: maps an entity id to the
# stored entity, or None when absent.
Resolver = Callable[[str], Optional[ContextEntity]]

MISSING_REQUIRED = "missing-required"
DISALLOWED_VALUE = "disallowed-value"
DANGLING_REFERENCE = "dangling-reference"


@dataclass(frozen=True)
class Violation:
    kind: str
    attribute: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    entity_id: str
    entity_type: str
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class SchemaDef:
    """Per-type attribute constraints.

    ``attributeSpecs`` maps attribute name to a spec dict with keys
    ``semanticType`` plus optional ``allowedValues`` (closed enum) and
    ``referencedType`` (relationship target type).
    """

    entity_type: str
    required: tuple[str, ...] = ()
    attribute_specs: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        for name in self.required:
            if name not in self.attribute_specs:
                raise MalformedEntity(
                    f"schema {self.entity_type}: required attribute {name!r} has no spec"
                )

    @classmethod
    def from_json(cls, doc: dict) -> "SchemaDef":
        return cls(
            entity_type=doc["entityType"],
            required=tuple(doc.get("required", [])),
            attribute_specs=dict(doc.get("attributeSpecs", {})),
        )

    def to_json(self) -> dict:
        return {
            "entityType": self.entity_type,
            "required": list(self.required),
            "attributeSpecs": self.attribute_specs,
        }


def validate(
    entity: ContextEntity,
    schema: SchemaDef,
    resolver: Resolver | None = None,
) -> ValidationReport:
    """Check an entity against its schema.

    The report lists missing required attributes, values outside a closed
    enum, and dangling references. A reference is dangling when its value is
    not shaped like an entity id, or (with a resolver) when the target entity
    is absent or of the wrong type. An empty-string reference means "cleared"
    and is not dangling. Deterministic and side-effect-free.
    """
    if entity.type != schema.entity_type:
        raise SchemaMismatch(
            f"entity type {entity.type!r} does not match schema {schema.entity_type!r}"
        )
    violations: list[Violation] = []
    for name in schema.required:
        if name not in entity.attributes:
            violations.append(Violation(MISSING_REQUIRED, name, "required attribute absent"))
    for name, spec in schema.attribute_specs.items():
        attr = entity.attributes.get(name)
        if attr is None:
            continue
        allowed = spec.get("allowedValues")
        if allowed is not None and attr.value not in allowed:
            violations.append(
                Violation(DISALLOWED_VALUE, name, f"value {attr.value!r} not in {allowed}")
            )
        ref_type = spec.get("referencedType")
        if ref_type is not None:
            violations.extend(_check_reference(name, attr.value, ref_type, resolver))
    return ValidationReport(entity.id, entity.type, tuple(violations))


def _check_reference(
    name: str, value: Any, ref_type: str, resolver: Resolver | None
) -> list[Violation]:
    if value == "" or value is None:
        return []
    if not looks_like_entity_id(value):
        return [Violation(DANGLING_REFERENCE, name, f"value {value!r} is not an entity id")]
    if resolver is not None:
        target = resolver(value)
        if target is None:
            return [Violation(DANGLING_REFERENCE, name, f"target {value!r} does not exist")]
        if target.type != ref_type:
            return [
                Violation(
                    DANGLING_REFERENCE,
                    name,
                    f"target {value!r} has type {target.type!r}, expected {ref_type!r}",
                )
            ]
    return []


class SchemaRegistry:
    """Holds SchemaDefs by entity type; unknown types validate trivially."""

    def __init__(self, schemas: dict[str, SchemaDef] | None = None):
        self._schemas = dict(schemas or {})

    def get(self, entity_type: str) -> SchemaDef | None:
        return self._schemas.get(entity_type)

    def add(self, schema: SchemaDef) -> None:
        self._schemas[schema.entity_type] = schema

    def types(self) -> list[str]:
        return sorted(self._schemas)

    def validate_entity(
        self, entity: ContextEntity, resolver: Resolver | None = None
    ) -> ValidationReport:
        schema = self._schemas.get(entity.type)
        if schema is None:
            return ValidationReport(entity.id, entity.type, ())
        return validate(entity, schema, resolver)

    @classmethod
    def from_directory(cls, path: str | Path) -> "SchemaRegistry":
        registry = cls()
        for file in sorted(Path(path).glob("*.json")):
            doc = json.loads(file.read_text(encoding="utf-8"))
            schema = SchemaDef.from_json(doc)
            if schema.entity_type != file.stem:
                raise MalformedEntity(
                    f"schema file {file.name} declares entityType {schema.entity_type!r}"
                )
            registry.add(schema)
        return registry

    def save_directory(self, path: str | Path) -> None:
        target = Path(path)
        target.mkdir(parents=True, exist_ok=True)
        for entity_type, schema in self._schemas.items():
            (target / f"{entity_type}.json").write_text(
                json.dumps(schema.to_json(), indent=2) + "\n", encoding="utf-8"
            )


def builtin_registry() -> SchemaRegistry:
    """Registry of the four models shipped with the package."""
    registry = SchemaRegistry()
    root = resources.files("parktwin.context").joinpath("schemas")
    for entry in root.iterdir():
        if entry.name.endswith(".json"):
            registry.add(SchemaDef.from_json(json.loads(entry.read_text(encoding="utf-8"))))
    return registry
