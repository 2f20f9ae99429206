"""Subscriptions and the change matcher.

A subscription names the entities it watches (by id, id pattern, or type),
the attributes whose change qualifies (empty = any), and where to notify.
``match`` must agree with a brute-force evaluation of every subscription;
the registry keeps a type index only as a shortcut.
"""

from __future__ import annotations

import re
import threading
import uuid
from dataclasses import dataclass, field
from typing import Iterable, Optional, Pattern

from parktwin.context.model import ContextEntity
from parktwin.errors import MalformedSubscription, NotFound

ACTIVE = "active"
INACTIVE = "inactive"


@dataclass(frozen=True)
class SubjectEntry:
    """Exactly one of ``id`` / ``id_pattern``; type optional (None = any)."""

    id: Optional[str] = None
    id_pattern: Optional[Pattern] = None
    type: Optional[str] = None

    def matches(self, entity: ContextEntity) -> bool:
        if self.id is not None and entity.id != self.id:
            return False
        if self.id_pattern is not None and not self.id_pattern.fullmatch(entity.id):
            return False
        if self.type is not None and entity.type != self.type:
            return False
        return True


@dataclass(frozen=True)
class Subscription:
    id: str
    entries: tuple[SubjectEntry, ...]
    condition_attrs: frozenset[str]
    url: str
    notify_attrs: tuple[str, ...]
    representation: str
    throttling_seconds: float
    status: str = ACTIVE

    def subject_matches(self, entity: ContextEntity) -> bool:
        return any(entry.matches(entity) for entry in self.entries)

    def condition_matches(self, changed_attrs: Iterable[str]) -> bool:
        if not self.condition_attrs:
            return True
        return not self.condition_attrs.isdisjoint(changed_attrs)

    def to_json(self) -> dict:
        entries = []
        for entry in self.entries:
            doc: dict = {}
            if entry.id is not None:
                doc["id"] = entry.id
            if entry.id_pattern is not None:
                doc["idPattern"] = entry.id_pattern.pattern
            if entry.type is not None:
                doc["type"] = entry.type
            entries.append(doc)
        return {
            "id": self.id,
            "status": self.status,
            "subject": {
                "entities": entries,
                "condition": {"attrs": sorted(self.condition_attrs)},
            },
            "notification": {
                "url": self.url,
                "attrs": list(self.notify_attrs),
                "representation": self.representation,
            },
            "throttling": self.throttling_seconds,
        }


def parse_subscription(doc: dict, sub_id: str | None = None) -> Subscription:
    """Build a Subscription from its JSON form; server assigns the id.

    A subject entry missing both ``id`` and ``idPattern`` is normalized to
    idPattern ``.*`` (type-only subscriptions are common); carrying both is
    rejected. An absent subject watches everything.
    """
    if not isinstance(doc, dict):
        raise MalformedSubscription("subscription must be a JSON object")
    subject = doc.get("subject") or {}
    raw_entries = subject.get("entities") or [{}]
    if not isinstance(raw_entries, list) or not raw_entries:
        raise MalformedSubscription("subject.entities must be a non-empty list")
    entries = []
    for raw in raw_entries:
        ent_id = raw.get("id")
        ent_pattern = raw.get("idPattern")
        if ent_id is not None and ent_pattern is not None:
            raise MalformedSubscription("subject entry carries both id and idPattern")
        if ent_id is None and ent_pattern is None:
            ent_pattern = ".*"
        compiled = None
        if ent_pattern is not None:
            try:
                compiled = re.compile(ent_pattern)
            except re.error as exc:
                raise MalformedSubscription(f"bad idPattern {ent_pattern!r}: {exc}")
        entries.append(SubjectEntry(id=ent_id, id_pattern=compiled, type=raw.get("type")))

    condition = subject.get("condition") or {}
    cond_attrs = condition.get("attrs") or []
    if not isinstance(cond_attrs, list):
        raise MalformedSubscription("condition.attrs must be a list")

    notification = doc.get("notification") or {}
    url = notification.get("url")
    if not url or not isinstance(url, str):
        raise MalformedSubscription("notification.url is required")
    notify_attrs = notification.get("attrs") or []
    representation = notification.get("representation", "keyValues")
    if representation not in ("keyValues", "normalized"):
        raise MalformedSubscription(f"unknown representation {representation!r}")

    throttling = doc.get("throttling", 0)
    if not isinstance(throttling, (int, float)) or throttling < 0:
        raise MalformedSubscription("throttling must be a non-negative number")

    status = doc.get("status", ACTIVE)
    if status not in (ACTIVE, INACTIVE):
        raise MalformedSubscription(f"unknown status {status!r}")

    return Subscription(
        id=sub_id or f"sub-{uuid.uuid4().hex[:12]}",
        entries=tuple(entries),
        condition_attrs=frozenset(str(a) for a in cond_attrs),
        url=url,
        notify_attrs=tuple(str(a) for a in notify_attrs),
        representation=representation,
        throttling_seconds=float(throttling),
        status=status,
    )


def match(
    entity: ContextEntity,
    changed_attrs: Iterable[str],
    subscriptions: Iterable[Subscription],
) -> list[Subscription]:
    """Active subscriptions whose subject matches the entity and whose
    condition is empty or intersects the changed attribute names."""
    changed = set(changed_attrs)
    return [
        sub
        for sub in subscriptions
        if sub.status == ACTIVE
        and sub.subject_matches(entity)
        and sub.condition_matches(changed)
    ]


@dataclass
class SubscriptionStats:
    """Mutable delivery counters; lastFailure is an ISO timestamp or None."""

    delivered: int = 0
    failed: int = 0
    throttled: int = 0
    last_failure: str | None = None


class SubscriptionRegistry:
    """Atomic subscription set with a type index for the fast path."""

    def __init__(self):
        self._subs: dict[str, Subscription] = {}
        self._stats: dict[str, SubscriptionStats] = {}
        self._by_type: dict[str, set[str]] = {}
        self._wildcard: set[str] = set()
        self._lock = threading.Lock()

    def add(self, sub: Subscription) -> str:
        with self._lock:
            self._subs[sub.id] = sub
            self._stats[sub.id] = SubscriptionStats()
            typed = {entry.type for entry in sub.entries}
            if None in typed:
                self._wildcard.add(sub.id)
                typed.discard(None)
            for entity_type in typed:
                self._by_type.setdefault(entity_type, set()).add(sub.id)
            return sub.id

    def remove(self, sub_id: str) -> None:
        with self._lock:
            if sub_id not in self._subs:
                raise NotFound(f"subscription {sub_id!r} does not exist")
            del self._subs[sub_id]
            del self._stats[sub_id]
            self._wildcard.discard(sub_id)
            for ids in self._by_type.values():
                ids.discard(sub_id)

    def get(self, sub_id: str) -> Subscription:
        with self._lock:
            sub = self._subs.get(sub_id)
        if sub is None:
            raise NotFound(f"subscription {sub_id!r} does not exist")
        return sub

    def stats(self, sub_id: str) -> SubscriptionStats:
        with self._lock:
            return self._stats[sub_id]

    def all(self) -> list[Subscription]:
        with self._lock:
            return list(self._subs.values())

    def candidates(self, entity_type: str) -> list[Subscription]:
        with self._lock:
            ids = self._wildcard | self._by_type.get(entity_type, set())
            return [self._subs[i] for i in ids]

    def match(self, entity: ContextEntity, changed_attrs: Iterable[str]) -> list[Subscription]:
        return match(entity, changed_attrs, self.candidates(entity.type))
