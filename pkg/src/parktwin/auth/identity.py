"""Subject store and bearer-token issuance.

Passwords are held as salted PBKDF2 hashes and never logged or stored in
clear. Tokens are opaque 256-bit random strings kept server-side, so
revocation is immediate; introspection reads the subject's roles fresh on
every check. Credential failures are indistinguishable between unknown
user and wrong password.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import secrets
import threading
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path

from parktwin.clock import Clock, SystemClock, format_iso_utc
from parktwin.errors import DuplicateUser, Forbidden, InvalidCredentials, UnknownUser

_PBKDF2_ITERATIONS = 20_000
DEFAULT_TOKEN_TTL = 3600.0

CREDENTIAL_FAILURE = "invalid username or password"


def _hash_password(password: str, salt: bytes) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, _PBKDF2_ITERATIONS)


@dataclass
class Subject:
    username: str
    salt: bytes
    password_hash: bytes
    roles: set[str] = field(default_factory=set)

    def verify(self, password: str) -> bool:
        return hmac.compare_digest(self.password_hash, _hash_password(password, self.salt))


@dataclass(frozen=True)
class TokenRecord:
    token: str
    username: str
    issued_at: str
    expires_at_mono: float


class IdentityService:
    def __init__(self, token_ttl: float = DEFAULT_TOKEN_TTL, clock: Clock | None = None):
        self.token_ttl = token_ttl
        self.clock = clock or SystemClock()
        self._subjects: dict[str, Subject] = {}
        self._tokens: dict[str, TokenRecord] = {}
        self._lock = threading.Lock()

    # -- subject management (admin only unless bootstrap) -----------------------

    def bootstrap_user(self, username: str, password: str, roles: set[str] | list[str]) -> None:
        """Create a subject without an admin token; for initial provisioning."""
        self._create(username, password, set(roles))

    def create_user(
        self, admin_token: str, username: str, password: str, roles: set[str] | list[str] = ()
    ) -> None:
        self._require_admin(admin_token)
        self._create(username, password, set(roles))

    def delete_user(self, admin_token: str, username: str) -> None:
        self._require_admin(admin_token)
        with self._lock:
            if username not in self._subjects:
                raise UnknownUser(f"no such user {username!r}")
            del self._subjects[username]

    def assign_role(self, admin_token: str, username: str, role: str) -> None:
        self._require_admin(admin_token)
        with self._lock:
            subject = self._subjects.get(username)
            if subject is None:
                raise UnknownUser(f"no such user {username!r}")
            subject.roles.add(role)

    def revoke_role(self, admin_token: str, username: str, role: str) -> None:
        self._require_admin(admin_token)
        with self._lock:
            subject = self._subjects.get(username)
            if subject is None:
                raise UnknownUser(f"no such user {username!r}")
            subject.roles.discard(role)

    def _create(self, username: str, password: str, roles: set[str]) -> None:
        if not username or not password:
            raise InvalidCredentials("username and password must be non-empty")
        salt = secrets.token_bytes(16)
        with self._lock:
            if username in self._subjects:
                raise DuplicateUser(f"user {username!r} already exists")
            self._subjects[username] = Subject(username, salt, _hash_password(password, salt), roles)

    def _require_admin(self, token: str) -> None:
        result = self.introspect(token)
        if not result["active"] or "admin" not in result["roles"]:
            raise Forbidden("admin role required")

    # -- tokens ------------------------------------------------------------------

    def issue_token(self, username: str, password: str) -> dict:
        with self._lock:
            subject = self._subjects.get(username)
        if subject is None or not subject.verify(password):
            raise InvalidCredentials(CREDENTIAL_FAILURE)
        token = secrets.token_urlsafe(32)
        record = TokenRecord(
            token=token,
            username=username,
            issued_at=format_iso_utc(self.clock.now()),
            expires_at_mono=self.clock.monotonic() + self.token_ttl,
        )
        with self._lock:
            self._tokens[token] = record
        return {"access_token": token, "token_type": "Bearer", "expires_in": int(self.token_ttl)}

    def introspect(self, token: str) -> dict:
        """{"active": bool, "username": ..., "roles": [...]}; never raises."""
        with self._lock:
            record = self._tokens.get(token or "")
            subject = self._subjects.get(record.username) if record else None
        if record is None or subject is None:
            return {"active": False}
        if self.clock.monotonic() >= record.expires_at_mono:
            return {"active": False}
        return {"active": True, "username": record.username, "roles": sorted(subject.roles)}

    def revoke_token(self, token: str) -> None:
        with self._lock:
            self._tokens.pop(token, None)

    # -- bootstrap from config -----------------------------------------------------

    @classmethod
    def from_config(
        cls, doc: dict, token_ttl: float | None = None, clock: Clock | None = None
    ) -> "IdentityService":
        service = cls(token_ttl=token_ttl or doc.get("tokenTtl", DEFAULT_TOKEN_TTL), clock=clock)
        for user in doc.get("users", []):
            service.bootstrap_user(user["username"], user["password"], set(user.get("roles", [])))
        return service

    @classmethod
    def from_config_file(cls, path: str | Path, clock: Clock | None = None) -> "IdentityService":
        return cls.from_config(json.loads(Path(path).read_text(encoding="utf-8")), clock=clock)
