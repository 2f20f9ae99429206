"""Shared exception hierarchy.

Every service-level error carries a short machine-readable ``code`` that the
HTTP layers map onto status codes and JSON error bodies.
"""

from __future__ import annotations


class ParkTwinError(Exception):
    """Base class for all domain errors."""

    code = "Error"
    http_status = 500

    def __init__(self, description: str = ""):
        super().__init__(description or self.code)
        self.description = description or self.code


class MalformedEntity(ParkTwinError):
    code = "MalformedEntity"
    http_status = 400


class MalformedAttribute(ParkTwinError):
    code = "MalformedAttribute"
    http_status = 400


class SchemaMismatch(ParkTwinError):
    code = "SchemaMismatch"
    http_status = 400


class AlreadyExists(ParkTwinError):
    code = "AlreadyExists"
    http_status = 409


class NotFound(ParkTwinError):
    code = "NotFound"
    http_status = 404


class VersionConflict(ParkTwinError):
    code = "VersionConflict"
    http_status = 409


class BadFilter(ParkTwinError):
    code = "BadFilter"
    http_status = 400


class MalformedSubscription(ParkTwinError):
    code = "MalformedSubscription"
    http_status = 400


class MalformedPayload(ParkTwinError):
    code = "MalformedPayload"
    http_status = 400


class MalformedCommand(ParkTwinError):
    code = "MalformedCommand"
    http_status = 400


class UnknownDevice(ParkTwinError):
    code = "UnknownDevice"
    http_status = 404


class DuplicateDevice(ParkTwinError):
    code = "DuplicateDevice"
    http_status = 409


class UnknownActuator(ParkTwinError):
    code = "UnknownActuator"
    http_status = 404


class BrokerUnavailable(ParkTwinError):
    code = "BrokerUnavailable"
    http_status = 503


class MissingSourcePath(ParkTwinError):
    code = "MissingSourcePath"
    http_status = 400


class TemplateError(ParkTwinError):
    code = "TemplateError"
    http_status = 400


class BadRange(ParkTwinError):
    code = "BadRange"
    http_status = 400


class CorruptRecord(ParkTwinError):
    code = "CorruptRecord"
    http_status = 500

    def __init__(self, description: str = "", seq: int | None = None):
        super().__init__(description)
        self.seq = seq


class StorageFull(ParkTwinError):
    code = "StorageFull"
    http_status = 507


class BadHour(ParkTwinError):
    code = "BadHour"
    http_status = 400


class InvalidCredentials(ParkTwinError):
    code = "InvalidCredentials"
    http_status = 400


class Forbidden(ParkTwinError):
    code = "Forbidden"
    http_status = 403


class DuplicateUser(ParkTwinError):
    code = "DuplicateUser"
    http_status = 409


class UnknownUser(ParkTwinError):
    code = "UnknownUser"
    http_status = 404


class UpstreamUnavailable(ParkTwinError):
    code = "UpstreamUnavailable"
    http_status = 502


class ServiceUnreachable(ParkTwinError):
    code = "ServiceUnreachable"
    http_status = 503
