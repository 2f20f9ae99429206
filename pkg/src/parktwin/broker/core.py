"""Broker facade tying together store, subscriptions, and delivery.

Matching runs atomically with each write (against the post-write state) and
the notification documents are snapshotted at that point, so a later write
can never leak into an earlier notification. Delivery itself is async.
"""

from __future__ import annotations

import logging
from typing import Any, Mapping

from parktwin.broker.delivery import Notifier
from parktwin.broker.store import EntityStore
from parktwin.broker.subscriptions import (
    Subscription,
    SubscriptionRegistry,
    parse_subscription,
)
from parktwin.clock import Clock, SystemClock, format_iso_utc
from parktwin.context import codec
from parktwin.context.model import Attribute, ContextEntity

logger = logging.getLogger(__name__)


class ContextBroker:
    def __init__(
        self,
        retries: int = 3,
        backoff_base: float = 0.1,
        clock: Clock | None = None,
        notify_workers: int = 8,
    ):
        self.clock = clock or SystemClock()
        self.store = EntityStore()
        self.subscriptions = SubscriptionRegistry()
        self.notifier = Notifier(
            retries=retries, backoff_base=backoff_base, workers=notify_workers, clock=self.clock
        )

    # -- entity operations --------------------------------------------------

    def create_entity(self, entity: ContextEntity) -> int:
        return self.store.create(entity, on_write=self._on_write)

    def update_attrs(
        self,
        entity_id: str,
        attrs: Mapping[str, Attribute],
        expected_version: int | None = None,
    ) -> int:
        return self.store.update_attrs(
            entity_id, attrs, expected_version=expected_version, on_write=self._on_write
        )

    def get_entity(self, entity_id: str, representation: str = codec.KEY_VALUES) -> tuple[dict, int]:
        entity, version = self.store.get(entity_id)
        return codec.render(entity, representation), version

    def list_entities(
        self,
        entity_type: str | None = None,
        id_pattern: str | None = None,
        attr_equals: Mapping[str, Any] | None = None,
        representation: str = codec.KEY_VALUES,
    ) -> list[dict]:
        return [
            codec.render(entity, representation)
            for entity, _ in self.store.list(entity_type, id_pattern, attr_equals)
        ]

    def delete_entity(self, entity_id: str) -> None:
        # No deletion notifications: subscriptions watch changes, not absence.
        self.store.delete(entity_id)

    # -- subscription operations --------------------------------------------

    def create_subscription(self, doc: dict) -> str:
        sub = parse_subscription(doc)
        return self.subscriptions.add(sub)

    def delete_subscription(self, sub_id: str) -> None:
        self.subscriptions.remove(sub_id)

    def list_subscriptions(self) -> list[dict]:
        out = []
        for sub in self.subscriptions.all():
            doc = sub.to_json()
            stats = self.subscriptions.stats(sub.id)
            doc["delivery"] = {
                "delivered": stats.delivered,
                "failed": stats.failed,
                "throttled": stats.throttled,
                "lastFailure": stats.last_failure,
            }
            out.append(doc)
        return out

    # -- delivery ------------------------------------------------------------

    def pending_deliveries(self) -> int:
        return self.notifier.pending()

    def wait_idle(self, timeout: float = 30.0) -> bool:
        return self.notifier.wait_idle(timeout)

    def shutdown(self, snapshot_path: str | None = None) -> None:
        if snapshot_path:
            self.store.save_snapshot(snapshot_path)
        self.notifier.stop()

    # -- write hook ----------------------------------------------------------

    def _on_write(self, entity: ContextEntity, changed: set[str], version: int) -> None:
        matched = self.subscriptions.match(entity, changed)
        if not matched:
            return
        timestamp = format_iso_utc(self.clock.now())
        for sub in matched:
            doc = self._notification_doc(entity, sub)
            body = {"subscriptionId": sub.id, "data": [doc], "timestamp": timestamp}
            self.notifier.submit(sub, self.subscriptions.stats(sub.id), body)

    @staticmethod
    def _notification_doc(entity: ContextEntity, sub: Subscription) -> dict:
        if sub.notify_attrs:
            kept = {
                name: attr
                for name, attr in entity.attributes.items()
                if name in sub.notify_attrs
            }
            entity = ContextEntity(entity.id, entity.type, kept)
        return codec.render(entity, sub.representation)
