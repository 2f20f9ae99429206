"""Role -> permission policy with default deny.

A permission pairs an HTTP action with a resource pattern: an exact path,
or a prefix pattern ending in '*' (``/v2/entities/*``, ``/v2/entities/spot:*``).
Abstract resource names from the role model map onto concrete broker paths
through an alias table, which keeps the correspondence explicit and lets
config speak in terms like "parkingSpot.update".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

ACTIONS = ("GET", "POST", "PATCH", "PUT", "DELETE")


@dataclass(frozen=True)
class Permission:
    action: str
    resource_pattern: str

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unsupported action {self.action!r}")

    def matches(self, action: str, path: str) -> bool:
        if action != self.action:
            return False
        if self.resource_pattern.endswith("*"):
            return path.startswith(self.resource_pattern[:-1])
        return path == self.resource_pattern


# The role model names abstract resources; these aliases pin them to broker
# paths. Updating status is PATCH against the broker even where the abstract
# permission is phrased as a POST on /parkingSpot.
DEFAULT_ALIASES: dict[str, list[tuple[str, str]]] = {
    "parkingSpot.update": [("PATCH", "/v2/entities/spot:*")],
    "parkingSpot.retrieve": [("GET", "/v2/entities"), ("GET", "/v2/entities/*")],
}


class PolicyTable:
    def __init__(self, grants: dict[str, list[Permission]]):
        self._grants = {role: list(perms) for role, perms in grants.items()}

    def permissions_for(self, role: str) -> list[Permission]:
        return list(self._grants.get(role, []))

    def check(self, roles: Iterable[str], action: str, path: str) -> bool:
        """Allow iff any held role grants (action, path); otherwise deny."""
        for role in roles:
            for permission in self._grants.get(role, ()):
                if permission.matches(action, path):
                    return True
        return False

    @classmethod
    def from_json(cls, doc: dict) -> "PolicyTable":
        aliases: dict[str, list[tuple[str, str]]] = dict(DEFAULT_ALIASES)
        for name, entries in (doc.get("aliases") or {}).items():
            aliases[name] = [(e["action"], e["resource"]) for e in entries]
        grants: dict[str, list[Permission]] = {}
        for role, entries in (doc.get("roles") or {}).items():
            permissions: list[Permission] = []
            for entry in entries:
                if isinstance(entry, str):
                    for action, pattern in aliases[entry]:
                        permissions.append(Permission(action, pattern))
                else:
                    permissions.append(Permission(entry["action"], entry["resource"]))
            grants[role] = permissions
        return cls(grants)

    @classmethod
    def from_file(cls, path: str | Path) -> "PolicyTable":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def default_policy() -> PolicyTable:
    """The parking twin's role matrix: admin and supervisor may update spot
    status, everyone may retrieve; subject management is enforced by the
    identity service, not by broker paths."""
    return PolicyTable.from_json(
        {
            "roles": {
                "admin": ["parkingSpot.update", "parkingSpot.retrieve"],
                "supervisor": ["parkingSpot.update", "parkingSpot.retrieve"],
                "general": ["parkingSpot.retrieve"],
            }
        }
    )
