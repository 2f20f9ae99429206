"""Versioned latest-state entity store.

Holds exactly the newest state per entity id. Writes to one entity are
serialized by a per-entity lock and bump a gapless version counter; writes
to distinct entities interleave freely. History is someone else's job.
"""

from __future__ import annotations

import json
import re
import threading
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping, Optional

from parktwin.context import codec
from parktwin.context.model import Attribute, ContextEntity
from parktwin.errors import AlreadyExists, BadFilter, NotFound, VersionConflict


class _Record:
    __slots__ = ("entity", "version", "lock", "deleted")

    def __init__(self, entity: ContextEntity):
        self.entity = entity
        self.version = 0
        self.lock = threading.RLock()
        self.deleted = False


class EntityStore:
    def __init__(self):
        self._records: dict[str, _Record] = {}
        self._registry_lock = threading.Lock()

    def create(
        self,
        entity: ContextEntity,
        on_write: Callable[[ContextEntity, set[str], int], None] | None = None,
    ) -> int:
        """Insert a new entity at version 1.

        ``on_write`` runs while the entity lock is held, so subscription
        matching sees the post-write state atomically.
        """
        with self._registry_lock:
            existing = self._records.get(entity.id)
            if existing is not None and not existing.deleted:
                raise AlreadyExists(f"entity {entity.id!r} already exists")
            record = _Record(entity)
            record.lock.acquire()
            self._records[entity.id] = record
        try:
            record.version = 1
            if on_write is not None:
                on_write(entity, set(entity.attributes), record.version)
            return record.version
        finally:
            record.lock.release()

    def update_attrs(
        self,
        entity_id: str,
        attrs: Mapping[str, Attribute],
        expected_version: int | None = None,
        on_write: Callable[[ContextEntity, set[str], int], None] | None = None,
    ) -> int:
        """Replace (or append) the listed attributes and bump the version.

        An empty attribute map leaves the version unchanged and triggers
        nothing. With ``expected_version`` the write succeeds only when it
        equals the current version (compare-and-set).
        """
        record = self._get_record(entity_id)
        with record.lock:
            if record.deleted:
                raise NotFound(f"entity {entity_id!r} does not exist")
            if expected_version is not None and expected_version != record.version:
                raise VersionConflict(
                    f"expected version {expected_version}, current is {record.version}"
                )
            if not attrs:
                return record.version
            record.entity = record.entity.with_attrs(attrs)
            record.version += 1
            if on_write is not None:
                on_write(record.entity, set(attrs), record.version)
            return record.version

    def get(self, entity_id: str) -> tuple[ContextEntity, int]:
        record = self._get_record(entity_id)
        with record.lock:
            if record.deleted:
                raise NotFound(f"entity {entity_id!r} does not exist")
            return record.entity, record.version

    def exists(self, entity_id: str) -> bool:
        with self._registry_lock:
            record = self._records.get(entity_id)
            return record is not None and not record.deleted

    def resolve(self, entity_id: str) -> Optional[ContextEntity]:
        """Resolver hook for schema reference checks."""
        try:
            entity, _ = self.get(entity_id)
            return entity
        except NotFound:
            return None

    def delete(self, entity_id: str) -> None:
        with self._registry_lock:
            record = self._records.get(entity_id)
            if record is None or record.deleted:
                raise NotFound(f"entity {entity_id!r} does not exist")
            with record.lock:
                record.deleted = True
                del self._records[entity_id]

    def list(
        self,
        entity_type: str | None = None,
        id_pattern: str | None = None,
        attr_equals: Mapping[str, Any] | None = None,
    ) -> list[tuple[ContextEntity, int]]:
        """Stored entities satisfying all filters, in lexicographic id order."""
        if id_pattern is not None:
            try:
                compiled = re.compile(id_pattern)
            except re.error as exc:
                raise BadFilter(f"bad idPattern: {exc}")
        else:
            compiled = None
        out = []
        for entity, version in self._snapshot_iter():
            if entity_type is not None and entity.type != entity_type:
                continue
            if compiled is not None and not compiled.fullmatch(entity.id):
                continue
            if attr_equals and not _attrs_equal(entity, attr_equals):
                continue
            out.append((entity, version))
        out.sort(key=lambda pair: pair[0].id)
        return out

    def _snapshot_iter(self) -> Iterator[tuple[ContextEntity, int]]:
        with self._registry_lock:
            records = list(self._records.values())
        for record in records:
            with record.lock:
                if not record.deleted:
                    yield record.entity, record.version

    def _get_record(self, entity_id: str) -> _Record:
        with self._registry_lock:
            record = self._records.get(entity_id)
        if record is None or record.deleted:
            raise NotFound(f"entity {entity_id!r} does not exist")
        return record

    # Snapshot persistence: the latest state (not history) survives restarts.

    def save_snapshot(self, path: str | Path) -> None:
        docs = []
        for entity, version in self.list():
            docs.append({"version": version, "entity": codec.render(entity, codec.NORMALIZED)})
        Path(path).write_text(json.dumps(docs, indent=2), encoding="utf-8")

    def load_snapshot(self, path: str | Path) -> int:
        docs = json.loads(Path(path).read_text(encoding="utf-8"))
        count = 0
        with self._registry_lock:
            for item in docs:
                entity = codec.normalize(item["entity"], codec.NORMALIZED)
                record = _Record(entity)
                record.version = int(item["version"])
                self._records[entity.id] = record
                count += 1
        return count


def _attrs_equal(entity: ContextEntity, expected: Mapping[str, Any]) -> bool:
    for name, wanted in expected.items():
        attr = entity.attributes.get(name)
        if attr is None:
            return False
        value = attr.value
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            try:
                if float(value) != float(wanted):
                    return False
                continue
            except (TypeError, ValueError):
                return False
        if value != wanted:
            return False
    return True
