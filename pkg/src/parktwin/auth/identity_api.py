"""HTTP surface of the identity service.

POST /oauth/token implements the resource-owner password grant (form
encoded); the endpoint shape leaves room for other grant types. Subject
management requires an admin bearer token. /oauth/introspect serves the
enforcement proxy.
"""

from __future__ import annotations

from urllib.parse import parse_qs

from parktwin.auth.identity import IdentityService
from parktwin.errors import InvalidCredentials
from parktwin.httpkit import HttpService, Request, Response


def _form(request: Request) -> dict[str, str]:
    parsed = parse_qs(request.text(), keep_blank_values=True)
    return {k: v[0] for k, v in parsed.items()}


def _bearer(request: Request) -> str:
    header = request.header("authorization", "") or ""
    if header.lower().startswith("bearer "):
        return header[7:].strip()
    return ""


class IdentityApi:
    def __init__(self, identity: IdentityService, host: str = "127.0.0.1", port: int = 0):
        self.identity = identity
        self.service = HttpService("identity", host, port, cors=True)
        svc = self.service
        svc.add_route("POST", "/oauth/token", self.token)
        svc.add_route("POST", "/oauth/introspect", self.introspect)
        svc.add_route("POST", "/users", self.create_user)
        svc.add_route("DELETE", "/users/{name}", self.delete_user)
        svc.add_route("POST", "/users/{name}/roles/{role}", self.assign_role)
        svc.add_route("DELETE", "/users/{name}/roles/{role}", self.revoke_role)

    def start(self) -> "IdentityApi":
        self.service.start()
        return self

    def stop(self) -> None:
        self.service.stop()

    @property
    def base_url(self) -> str:
        return self.service.base_url

    def token(self, request: Request) -> Response:
        form = _form(request)
        if form.get("grant_type") != "password":
            return Response(400, {"error": "unsupported_grant_type"})
        try:
            grant = self.identity.issue_token(form.get("username", ""), form.get("password", ""))
        except InvalidCredentials:
            # one shape for every credential failure: no user enumeration
            return Response(400, {"error": "invalid_grant"})
        return Response(200, grant)

    def introspect(self, request: Request) -> Response:
        form = _form(request)
        return Response(200, self.identity.introspect(form.get("token", "")))

    def create_user(self, request: Request) -> Response:
        body = request.json() or {}
        self.identity.create_user(
            _bearer(request),
            body.get("username", ""),
            body.get("password", ""),
            body.get("roles", []),
        )
        return Response(201, {"username": body.get("username", "")})

    def delete_user(self, request: Request) -> Response:
        self.identity.delete_user(_bearer(request), request.params["name"])
        return Response(204)

    def assign_role(self, request: Request) -> Response:
        self.identity.assign_role(_bearer(request), request.params["name"], request.params["role"])
        return Response(204)

    def revoke_role(self, request: Request) -> Response:
        self.identity.revoke_role(_bearer(request), request.params["name"], request.params["role"])
        return Response(204)
