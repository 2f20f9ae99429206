"""HTTP/JSON surface of the context broker.

Endpoints mirror the NGSI-v2 core: entity CRUD under /v2/entities,
subscriptions under /v2/subscriptions. Compare-and-set rides on the
If-Match header; entity versions travel in X-Entity-Version. /admin/queues
exposes the delivery queue depth for quiesce detection.
"""

from __future__ import annotations

from parktwin.broker.core import ContextBroker
from parktwin.context import codec
from parktwin.errors import BadFilter, MalformedEntity
from parktwin.httpkit import HttpService, Request, Response


def representation_of(request: Request) -> str:
    options = request.query_param("options", "")
    return codec.KEY_VALUES if "keyValues" in (options or "") else codec.NORMALIZED


def parse_q_filter(q: str) -> dict[str, str]:
    """Parse `attr==value(;attr==value)*` equality filters."""
    filters: dict[str, str] = {}
    for clause in q.split(";"):
        clause = clause.strip()
        if not clause:
            continue
        if "==" not in clause:
            raise BadFilter(f"unsupported q clause {clause!r}, only attr==value")
        name, _, value = clause.partition("==")
        if not name:
            raise BadFilter(f"empty attribute in q clause {clause!r}")
        filters[name] = value
    return filters


class BrokerApi:
    def __init__(self, broker: ContextBroker, host: str = "127.0.0.1", port: int = 0):
        self.broker = broker
        self.service = HttpService("broker", host, port)
        svc = self.service
        svc.add_route("POST", "/v2/entities", self.create_entity)
        svc.add_route("GET", "/v2/entities", self.list_entities)
        svc.add_route("GET", "/v2/entities/{entity_id}", self.get_entity)
        svc.add_route("PATCH", "/v2/entities/{entity_id}/attrs", self.update_attrs)
        svc.add_route("DELETE", "/v2/entities/{entity_id}", self.delete_entity)
        svc.add_route("POST", "/v2/subscriptions", self.create_subscription)
        svc.add_route("GET", "/v2/subscriptions", self.list_subscriptions)
        svc.add_route("DELETE", "/v2/subscriptions/{sub_id}", self.delete_subscription)
        svc.add_route("GET", "/admin/queues", self.queue_depth)

    def start(self) -> "BrokerApi":
        self.service.start()
        return self

    def stop(self) -> None:
        self.service.stop()

    @property
    def base_url(self) -> str:
        return self.service.base_url

    # -- handlers -------------------------------------------------------------

    def create_entity(self, request: Request) -> Response:
        try:
            doc = request.json()
        except ValueError:
            raise MalformedEntity("request body is not valid JSON")
        entity = codec.normalize(doc, representation_of(request))
        version = self.broker.create_entity(entity)
        return Response(
            201,
            headers={
                "Location": f"/v2/entities/{entity.id}",
                "X-Entity-Version": str(version),
            },
        )

    def list_entities(self, request: Request) -> Response:
        q = request.query_param("q")
        attr_equals = parse_q_filter(q) if q else None
        docs = self.broker.list_entities(
            entity_type=request.query_param("type"),
            id_pattern=request.query_param("idPattern"),
            attr_equals=attr_equals,
            representation=representation_of(request),
        )
        return Response(200, docs)

    def get_entity(self, request: Request) -> Response:
        doc, version = self.broker.get_entity(
            request.params["entity_id"], representation_of(request)
        )
        return Response(200, doc, headers={"X-Entity-Version": str(version)})

    def update_attrs(self, request: Request) -> Response:
        try:
            doc = request.json()
        except ValueError:
            raise MalformedEntity("request body is not valid JSON")
        attrs = codec.parse_attrs(doc or {}, representation_of(request))
        expected = request.header("if-match")
        expected_version = int(expected) if expected else None
        version = self.broker.update_attrs(
            request.params["entity_id"], attrs, expected_version=expected_version
        )
        return Response(204, headers={"X-Entity-Version": str(version)})

    def delete_entity(self, request: Request) -> Response:
        self.broker.delete_entity(request.params["entity_id"])
        return Response(204)

    def create_subscription(self, request: Request) -> Response:
        sub_id = self.broker.create_subscription(request.json())
        return Response(
            201, {"id": sub_id}, headers={"Location": f"/v2/subscriptions/{sub_id}"}
        )

    def list_subscriptions(self, request: Request) -> Response:
        return Response(200, self.broker.list_subscriptions())

    def delete_subscription(self, request: Request) -> Response:
        self.broker.delete_subscription(request.params["sub_id"])
        return Response(204)

    def queue_depth(self, request: Request) -> Response:
        return Response(200, {"pending": self.broker.pending_deliveries()})
