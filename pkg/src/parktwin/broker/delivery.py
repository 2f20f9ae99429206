"""Asynchronous notification delivery.

Delivery is decoupled from the write path: writers enqueue and return.
Per subscription, tasks are delivered in FIFO order by at most one worker
at a time; distinct subscriptions deliver concurrently. Throttling is
decided synchronously at enqueue time (changes inside the window are
dropped, no trailing send), retries use exponential backoff.
"""

from __future__ import annotations

import json
import logging
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from parktwin.broker.subscriptions import Subscription, SubscriptionStats
from parktwin.clock import Clock, SystemClock, format_iso_utc
from parktwin.httpkit import KeepAlivePoster

logger = logging.getLogger(__name__)

DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_BASE = 0.1


@dataclass
class DeliveryOutcome:
    subscription_id: str
    url: str
    success: bool
    attempts: int
    error: str | None = None


@dataclass
class _Task:
    subscription: Subscription
    stats: SubscriptionStats
    body: dict
    outcomes: list = field(default_factory=list)


class Notifier:
    """Dispatch queue feeding an HTTP delivery worker pool."""

    def __init__(
        self,
        retries: int = DEFAULT_RETRIES,
        backoff_base: float = DEFAULT_BACKOFF_BASE,
        workers: int = 8,
        timeout: float = 10.0,
        clock: Clock | None = None,
    ):
        self.retries = retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.clock = clock or SystemClock()
        self._poster = KeepAlivePoster(timeout=timeout)
        self._pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="notify")
        self._lock = threading.Lock()
        self._queues: dict[str, deque[_Task]] = {}
        self._scheduled: set[str] = set()
        self._next_allowed: dict[str, float] = {}
        self._pending = 0
        self._idle = threading.Condition(self._lock)
        self.outcomes: list[DeliveryOutcome] = []

    def submit(self, sub: Subscription, stats: SubscriptionStats, body: dict) -> bool:
        """Queue one notification; returns False when throttled away."""
        with self._lock:
            now = self.clock.monotonic()
            if sub.throttling_seconds > 0:
                if now < self._next_allowed.get(sub.id, float("-inf")):
                    stats.throttled += 1
                    return False
                self._next_allowed[sub.id] = now + sub.throttling_seconds
            queue = self._queues.setdefault(sub.id, deque())
            queue.append(_Task(sub, stats, body))
            self._pending += 1
            if sub.id not in self._scheduled:
                self._scheduled.add(sub.id)
                self._pool.submit(self._drain, sub.id)
            return True

    def pending(self) -> int:
        with self._lock:
            return self._pending

    def wait_idle(self, timeout: float = 30.0) -> bool:
        with self._idle:
            return self._idle.wait_for(lambda: self._pending == 0, timeout=timeout)

    def stop(self) -> None:
        self._pool.shutdown(wait=True, cancel_futures=True)
        self._poster.close()

    def _drain(self, sub_id: str) -> None:
        while True:
            with self._lock:
                queue = self._queues.get(sub_id)
                if not queue:
                    self._scheduled.discard(sub_id)
                    return
                task = queue.popleft()
            try:
                self._deliver(task)
            finally:
                with self._idle:
                    self._pending -= 1
                    if self._pending == 0:
                        self._idle.notify_all()

    def _deliver(self, task: _Task) -> None:
        sub = task.subscription
        body = json.dumps(task.body).encode("utf-8")
        attempts = 0
        error: str | None = None
        for attempt in range(1 + self.retries):
            attempts += 1
            try:
                status = self._poster.post(sub.url, body, "application/json")
                if 200 <= status < 300:
                    task.stats.delivered += 1
                    self._record(DeliveryOutcome(sub.id, sub.url, True, attempts))
                    return
                error = f"HTTP {status}"
            except OSError as exc:
                error = type(exc).__name__
            if attempt < self.retries:
                self.clock.sleep(self.backoff_base * (2**attempt))
        task.stats.failed += 1
        task.stats.last_failure = format_iso_utc(self.clock.now())
        self._record(DeliveryOutcome(sub.id, sub.url, False, attempts, error))
        logger.warning("delivery to %s failed after %d attempts: %s", sub.url, attempts, error)

    def _record(self, outcome: DeliveryOutcome) -> None:
        with self._lock:
            self.outcomes.append(outcome)
            if len(self.outcomes) > 10000:
                del self.outcomes[:5000]
