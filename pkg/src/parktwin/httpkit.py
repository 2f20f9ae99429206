"""Minimal threaded HTTP service harness used by every component.

Built on the stdlib ThreadingHTTPServer: each service registers routes with
``{param}`` path segments plus an optional catch-all (used by the enforcement
proxy), binds an ephemeral port, and serves from a daemon thread. Keep-alive
is enabled so pooled client sessions reuse connections.
"""

from __future__ import annotations

import json
import logging
import re
import socket
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Optional
from urllib.parse import parse_qs, urlsplit

from parktwin.errors import ParkTwinError

logger = logging.getLogger(__name__)

_PARAM_RE = re.compile(r"\{([a-zA-Z_][a-zA-Z0-9_]*)\}")


@dataclass
class Request:
    method: str
    path: str
    query: dict[str, list[str]]
    headers: dict[str, str]
    body: bytes
    params: dict[str, str] = field(default_factory=dict)
    client_addr: str = ""
    raw_query: str = ""

    def json(self) -> Any:
        if not self.body:
            return None
        return json.loads(self.body.decode("utf-8"))

    def text(self) -> str:
        return self.body.decode("utf-8")

    def query_param(self, name: str, default: str | None = None) -> str | None:
        values = self.query.get(name)
        return values[0] if values else default

    def header(self, name: str, default: str | None = None) -> str | None:
        return self.headers.get(name.lower(), default)


@dataclass
class Response:
    status: int = 200
    body: Any = None
    headers: dict[str, str] = field(default_factory=dict)

    def encode(self) -> tuple[int, dict[str, str], bytes]:
        headers = dict(self.headers)
        body = self.body
        if body is None:
            raw = b""
        elif isinstance(body, bytes):
            raw = body
        elif isinstance(body, str):
            raw = body.encode("utf-8")
            headers.setdefault("Content-Type", "text/plain; charset=utf-8")
        else:
            raw = json.dumps(body).encode("utf-8")
            headers.setdefault("Content-Type", "application/json")
        return self.status, headers, raw


def json_response(body: Any, status: int = 200, headers: dict[str, str] | None = None) -> Response:
    return Response(status=status, body=body, headers=dict(headers or {}))


def error_response(exc: ParkTwinError) -> Response:
    return Response(
        status=exc.http_status,
        body={"error": exc.code, "description": exc.description},
    )


Handler = Callable[[Request], Response]


class _TrackingServer(ThreadingHTTPServer):
    """ThreadingHTTPServer that can tear down live keep-alive connections.

    shutdown() alone only stops accepting; established connections would
    keep serving until the peer closes them. The default listen backlog of 5
    drops connections under bursts, hence the larger queue.
    """

    daemon_threads = True
    request_queue_size = 128

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._connections: set = set()
        self._conn_lock = threading.Lock()

    def process_request(self, request, client_address):
        with self._conn_lock:
            self._connections.add(request)
        super().process_request(request, client_address)

    def shutdown_request(self, request):
        with self._conn_lock:
            self._connections.discard(request)
        super().shutdown_request(request)

    def close_all_connections(self):
        with self._conn_lock:
            connections = list(self._connections)
        for conn in connections:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass


class _Route:
    def __init__(self, method: str, pattern: str, handler: Handler):
        self.method = method
        self.handler = handler
        regex = ""
        for part in re.split(r"(\{[a-zA-Z_][a-zA-Z0-9_]*\})", pattern):
            match = _PARAM_RE.fullmatch(part)
            if match:
                regex += f"(?P<{match.group(1)}>[^/]+)"
            else:
                regex += re.escape(part)
        self._regex = re.compile(f"^{regex}$")

    def match(self, method: str, path: str) -> Optional[dict[str, str]]:
        if method != self.method:
            return None
        m = self._regex.match(path)
        return m.groupdict() if m else None


class KeepAlivePoster:
    """Lean keep-alive POST client on http.client with per-host pooling.

    The delivery path is hot: a full-featured HTTP library spends around a
    millisecond of interpreter time per call, which caps broker throughput.
    Stale pooled connections are retried once on a fresh one.
    """

    def __init__(self, timeout: float = 10.0):
        self.timeout = timeout
        self._pools: dict[tuple[str, int], list] = {}
        self._lock = threading.Lock()

    def post(self, url: str, body: bytes, content_type: str) -> int:
        """POST and return the status code; raises OSError on connect failure."""
        import http.client

        split = urlsplit(url)
        key = (split.hostname or "127.0.0.1", split.port or 80)
        path = split.path + (f"?{split.query}" if split.query else "")
        headers = {"Content-Type": content_type, "Content-Length": str(len(body))}
        conn, reused = self._take(key)
        for fresh_retry in (False, True):
            if conn is None:
                conn = http.client.HTTPConnection(key[0], key[1], timeout=self.timeout)
                reused = False
            try:
                conn.request("POST", path, body=body, headers=headers)
                response = conn.getresponse()
                response.read()
                self._put(key, conn)
                return response.status
            except (http.client.HTTPException, OSError):
                conn.close()
                conn = None
                if not reused or fresh_retry:
                    raise
        raise OSError("unreachable")

    def _take(self, key):
        with self._lock:
            pool = self._pools.get(key)
            if pool:
                return pool.pop(), True
        return None, False

    def _put(self, key, conn) -> None:
        with self._lock:
            self._pools.setdefault(key, []).append(conn)

    def close(self) -> None:
        with self._lock:
            for pool in self._pools.values():
                for conn in pool:
                    conn.close()
            self._pools.clear()


class HttpService:
    """A named HTTP server with routing, request counting, and CORS option."""

    def __init__(self, name: str, host: str = "127.0.0.1", port: int = 0, cors: bool = False):
        self.name = name
        self._host = host
        self._port = port
        self._cors = cors
        self._routes: list[_Route] = []
        self._fallback: Handler | None = None
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None
        self._count_lock = threading.Lock()
        self.request_count = 0

    def route(self, method: str, pattern: str):
        def register(handler: Handler) -> Handler:
            self.add_route(method, pattern, handler)
            return handler

        return register

    def add_route(self, method: str, pattern: str, handler: Handler) -> None:
        self._routes.append(_Route(method.upper(), pattern, handler))

    def set_fallback(self, handler: Handler) -> None:
        self._fallback = handler

    @property
    def port(self) -> int:
        if self._server is None:
            raise RuntimeError(f"service {self.name} not started")
        return self._server.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self._host}:{self.port}"

    def start(self) -> "HttpService":
        service = self

        class RequestHandler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"
            timeout = 30
            # one buffered write per response; tiny unbuffered segments and
            # Nagle interact badly with delayed ACKs even on loopback
            wbufsize = 64 * 1024
            disable_nagle_algorithm = True

            def log_message(self, fmt, *args):  # quiet; route through logging
                logger.debug("%s %s", service.name, fmt % args)

            def _handle(self):
                service._bump()
                split = urlsplit(self.path)
                length = int(self.headers.get("Content-Length") or 0)
                body = self.rfile.read(length) if length else b""
                request = Request(
                    method=self.command,
                    path=split.path,
                    query=parse_qs(split.query),
                    headers={k.lower(): v for k, v in self.headers.items()},
                    body=body,
                    client_addr=self.client_address[0],
                    raw_query=split.query,
                )
                try:
                    response = service._dispatch(request)
                except ParkTwinError as exc:
                    response = error_response(exc)
                except Exception:
                    logger.exception("%s: unhandled error on %s %s", service.name, request.method, request.path)
                    response = Response(500, {"error": "InternalError", "description": "internal error"})
                status, headers, raw = response.encode()
                if service._cors:
                    headers.setdefault("Access-Control-Allow-Origin", "*")
                    headers.setdefault("Access-Control-Allow-Headers", "Authorization, Content-Type, If-Match")
                    headers.setdefault("Access-Control-Allow-Methods", "GET, POST, PATCH, PUT, DELETE, OPTIONS")
                try:
                    self.send_response(status)
                    for key, value in headers.items():
                        self.send_header(key, value)
                    self.send_header("Content-Length", str(len(raw)))
                    self.end_headers()
                    if raw:
                        self.wfile.write(raw)
                except (BrokenPipeError, ConnectionResetError):
                    pass

            do_GET = do_POST = do_PATCH = do_PUT = do_DELETE = do_OPTIONS = _handle

        self._server = _TrackingServer((self._host, self._port), RequestHandler)
        self._thread = threading.Thread(
            target=lambda: self._server.serve_forever(poll_interval=0.05),
            name=f"http-{self.name}",
            daemon=True,
        )
        self._thread.start()
        logger.info("%s listening on %s", self.name, self.base_url)
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.close_all_connections()
            self._server.server_close()
            self._server = None
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def _bump(self) -> None:
        with self._count_lock:
            self.request_count += 1

    def _dispatch(self, request: Request) -> Response:
        if self._cors and request.method == "OPTIONS":
            return Response(204)
        for route in self._routes:
            params = route.match(request.method, request.path)
            if params is not None:
                request.params = params
                return route.handler(request)
        if self._fallback is not None:
            return self._fallback(request)
        return Response(404, {"error": "NotFound", "description": f"no route for {request.path}"})
