"""HTTP client for the broker API, shared by agent, dataflow, and analytics.

Wraps a pooled requests session; raises the domain errors matching the
broker's JSON error bodies. ``adjust_number`` implements the race-safe
read-modify-write loop on top of If-Match compare-and-set.
"""

from __future__ import annotations

import random
import time

import requests

from parktwin.errors import (
    AlreadyExists,
    BrokerUnavailable,
    NotFound,
    ParkTwinError,
    VersionConflict,
)

_ERRORS = {
    "AlreadyExists": AlreadyExists,
    "NotFound": NotFound,
    "VersionConflict": VersionConflict,
}


class BrokerClient:
    def __init__(self, base_url: str, session: requests.Session | None = None, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        if session is None:
            session = requests.Session()
            adapter = requests.adapters.HTTPAdapter(pool_connections=16, pool_maxsize=64)
            session.mount("http://", adapter)
        self.session = session
        self.timeout = timeout

    def _request(self, method: str, path: str, **kwargs) -> requests.Response:
        kwargs.setdefault("timeout", self.timeout)
        try:
            response = self.session.request(method, self.base_url + path, **kwargs)
        except requests.RequestException as exc:
            raise BrokerUnavailable(f"broker unreachable: {type(exc).__name__}")
        if response.status_code >= 400:
            raise self._error_from(response)
        return response

    @staticmethod
    def _error_from(response: requests.Response) -> ParkTwinError:
        try:
            body = response.json()
            code = body.get("error", "")
            description = body.get("description", "")
        except ValueError:
            code, description = "", response.text
        exc_type = _ERRORS.get(code, ParkTwinError)
        exc = exc_type(description or f"HTTP {response.status_code}")
        exc.http_status = response.status_code
        return exc

    @staticmethod
    def _options(key_values: bool) -> dict:
        return {"options": "keyValues"} if key_values else {}

    # -- entities -------------------------------------------------------------

    def create_entity(self, doc: dict, key_values: bool = True) -> int:
        response = self._request(
            "POST", "/v2/entities", json=doc, params=self._options(key_values)
        )
        return int(response.headers.get("X-Entity-Version", "1"))

    def get_entity(self, entity_id: str, key_values: bool = True) -> tuple[dict, int]:
        response = self._request(
            "GET", f"/v2/entities/{entity_id}", params=self._options(key_values)
        )
        return response.json(), int(response.headers.get("X-Entity-Version", "0"))

    def update_attrs(
        self,
        entity_id: str,
        attrs: dict,
        expected_version: int | None = None,
        key_values: bool = True,
    ) -> int:
        headers = {}
        if expected_version is not None:
            headers["If-Match"] = str(expected_version)
        response = self._request(
            "PATCH",
            f"/v2/entities/{entity_id}/attrs",
            json=attrs,
            params=self._options(key_values),
            headers=headers,
        )
        return int(response.headers.get("X-Entity-Version", "0"))

    def upsert_entity(self, doc: dict, key_values: bool = True) -> int:
        """Create if absent, else update the non-id/type attributes."""
        try:
            return self.create_entity(doc, key_values)
        except AlreadyExists:
            attrs = {k: v for k, v in doc.items() if k not in ("id", "type")}
            return self.update_attrs(doc["id"], attrs, key_values=key_values)

    def delete_entity(self, entity_id: str) -> None:
        self._request("DELETE", f"/v2/entities/{entity_id}")

    def list_entities(
        self,
        entity_type: str | None = None,
        id_pattern: str | None = None,
        q: str | None = None,
        key_values: bool = True,
    ) -> list[dict]:
        params = self._options(key_values)
        if entity_type:
            params["type"] = entity_type
        if id_pattern:
            params["idPattern"] = id_pattern
        if q:
            params["q"] = q
        return self._request("GET", "/v2/entities", params=params).json()

    def adjust_number(
        self,
        entity_id: str,
        attr_name: str,
        delta: float,
        attempts: int = 128,
        backoff_base: float = 0.002,
        backoff_cap: float = 0.05,
    ) -> float:
        """Atomically add ``delta`` via compare-and-set, retrying on conflict.

        Each conflict means another writer advanced the entity, so an attempt
        budget above the contender count always terminates; full-jitter
        backoff (capped) thins the contention. Raises BrokerUnavailable when
        the budget runs out.
        """
        for attempt in range(attempts):
            doc, version = self.get_entity(entity_id)
            current = doc.get(attr_name, 0)
            new_value = current + delta
            try:
                self.update_attrs(entity_id, {attr_name: new_value}, expected_version=version)
                return new_value
            except VersionConflict:
                time.sleep(random.uniform(0, min(backoff_cap, backoff_base * (2 ** min(attempt, 6)))))
        raise BrokerUnavailable(
            f"compare-and-set on {entity_id}.{attr_name} failed after {attempts} attempts"
        )

    # -- subscriptions ---------------------------------------------------------

    def create_subscription(self, doc: dict) -> str:
        return self._request("POST", "/v2/subscriptions", json=doc).json()["id"]

    def list_subscriptions(self) -> list[dict]:
        return self._request("GET", "/v2/subscriptions").json()

    def delete_subscription(self, sub_id: str) -> None:
        self._request("DELETE", f"/v2/subscriptions/{sub_id}")

    def pending_deliveries(self) -> int:
        return self._request("GET", "/admin/queues").json()["pending"]
