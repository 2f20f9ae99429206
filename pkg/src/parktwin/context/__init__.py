"""Context entity data model, JSON codecs, and schema validation."""

from parktwin.context.model import Attribute, ContextEntity
from parktwin.context.codec import normalize, render, KEY_VALUES, NORMALIZED
from parktwin.context.schema import (
    SchemaDef,
    SchemaRegistry,
    ValidationReport,
    Violation,
    builtin_registry,
    validate,
)

__all__ = [
    "Attribute",
    "ContextEntity",
    "normalize",
    "render",
    "KEY_VALUES",
    "NORMALIZED",
    "SchemaDef",
    "SchemaRegistry",
    "ValidationReport",
    "Violation",
    "builtin_registry",
    "validate",
]
