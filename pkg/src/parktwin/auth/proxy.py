"""Policy-enforcement reverse proxy fronting the broker.

Every request needs an active bearer token (401 otherwise, with a pointer
to the identity endpoint) and a role holding a matching permission (403,
and the upstream is never contacted). Allowed requests forward verbatim
minus the authorization header; the upstream address never appears in any
response header or body, and token material is never logged.
"""

from __future__ import annotations

import logging
from typing import Callable

import requests

from parktwin.auth.policy import PolicyTable
from parktwin.httpkit import HttpService, Request, Response

logger = logging.getLogger(__name__)

# end-to-end and hop-by-hop headers the proxy must not blindly relay
_SKIP_REQUEST_HEADERS = {"host", "authorization", "connection", "content-length", "accept-encoding"}
_RELAY_RESPONSE_HEADERS = {"content-type", "x-entity-version", "location"}

Introspector = Callable[[str], dict]


class HttpIntrospector:
    """Token introspection against a remote identity service."""

    def __init__(self, identity_url: str, timeout: float = 10.0):
        self.url = identity_url.rstrip("/") + "/oauth/introspect"
        self.timeout = timeout
        self._session = requests.Session()

    def __call__(self, token: str) -> dict:
        try:
            response = self._session.post(self.url, data={"token": token}, timeout=self.timeout)
            if response.status_code == 200:
                return response.json()
        except (requests.RequestException, ValueError):
            pass
        return {"active": False}


class PepProxy:
    def __init__(
        self,
        upstream_url: str,
        introspect: Introspector,
        policy: PolicyTable,
        identity_hint_url: str = "",
        forward_authorization: bool = False,
        host: str = "127.0.0.1",
        port: int = 0,
        timeout: float = 15.0,
    ):
        self._upstream = upstream_url.rstrip("/")
        self.introspect = introspect
        self.policy = policy
        self.identity_hint_url = identity_hint_url
        self.forward_authorization = forward_authorization
        self.timeout = timeout
        self._session = requests.Session()
        self.service = HttpService("pep-proxy", host, port, cors=True)
        self.service.set_fallback(self.handle)

    def start(self) -> "PepProxy":
        self.service.start()
        return self

    def stop(self) -> None:
        self.service.stop()

    @property
    def base_url(self) -> str:
        return self.service.base_url

    def handle(self, request: Request) -> Response:
        token = self._bearer(request)
        if not token:
            return self._challenge("missing bearer token")
        result = self.introspect(token)
        if not result.get("active"):
            return self._challenge("token inactive or unknown")
        roles = result.get("roles", [])
        if not self.policy.check(roles, request.method, request.path):
            logger.info("deny %s %s for roles %s", request.method, request.path, roles)
            return Response(403, {"error": "Forbidden", "description": "permission denied"})
        return self._forward(request)

    def _challenge(self, description: str) -> Response:
        body = {"error": "Unauthorized", "description": description}
        if self.identity_hint_url:
            body["identityEndpoint"] = self.identity_hint_url + "/oauth/token"
        return Response(
            401, body, headers={"WWW-Authenticate": 'Bearer realm="context"'}
        )

    def _forward(self, request: Request) -> Response:
        headers = {
            k: v for k, v in request.headers.items() if k not in _SKIP_REQUEST_HEADERS
        }
        if self.forward_authorization and "authorization" in request.headers:
            headers["Authorization"] = request.headers["authorization"]
        url = self._upstream + request.path + (f"?{request.raw_query}" if request.raw_query else "")
        try:
            upstream = self._session.request(
                request.method,
                url,
                data=request.body or None,
                headers=headers,
                timeout=self.timeout,
                allow_redirects=False,
            )
        except requests.RequestException:
            logger.warning("upstream unreachable for %s %s", request.method, request.path)
            return Response(502, {"error": "UpstreamUnavailable", "description": "upstream unavailable"})
        relayed = {
            k: v
            for k, v in upstream.headers.items()
            if k.lower() in _RELAY_RESPONSE_HEADERS and not v.startswith("http")
        }
        return Response(upstream.status_code, upstream.content, relayed)

    @staticmethod
    def _bearer(request: Request) -> str:
        header = request.header("authorization", "") or ""
        if header.lower().startswith("bearer "):
            return header[7:].strip()
        return ""
