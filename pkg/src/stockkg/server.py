"""Read-only HTTP service over a loaded snapshot (stdlib ThreadingHTTPServer)."""

from __future__ import annotations

import json
import logging
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .core import Engine, error_json, table_json, to_json_text
from .errors import BackendTimeout, StockKGError, UserError

log = logging.getLogger(__name__)
MAX_BODY = 1 << 20


def status_for(exc: BaseException) -> int:
    if isinstance(exc, BackendTimeout):
        return HTTPStatus.GATEWAY_TIMEOUT
    if isinstance(exc, UserError):
        return HTTPStatus.BAD_REQUEST
    return HTTPStatus.INTERNAL_SERVER_ERROR


class _BadRequest(UserError):
    pass


def make_handler(engine: Engine):
    class Handler(BaseHTTPRequestHandler):
        server_version = "stockkg"

        def log_message(self, fmt, *args):
            log.info("%s - %s", self.address_string(), fmt % args)

        def _send(self, status: int, payload) -> None:
            body = to_json_text(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _body(self, key: str) -> str:
            length = int(self.headers.get("Content-Length") or 0)
            if length <= 0 or length > MAX_BODY:
                raise _BadRequest("request body missing or too large")
            try:
                data = json.loads(self.rfile.read(length).decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise _BadRequest(f"request body is not JSON: {exc}") from exc
            value = data.get(key) if isinstance(data, dict) else None
            if not isinstance(value, str):
                raise _BadRequest(f'expected a JSON object with a "{key}" string')
            return value

        def _guard(self, fn) -> None:
            try:
                self._send(HTTPStatus.OK, fn())
            except StockKGError as exc:
                self._send(status_for(exc), error_json(exc))
            except Exception as exc:  # keep the service up on bugs
                log.exception("internal error")
                self._send(HTTPStatus.INTERNAL_SERVER_ERROR, error_json(exc))

        def do_GET(self):
            if self.path == "/health":
                self._guard(lambda: {"status": "ok", "nodes": engine.graph.node_count,
                                     "edges": engine.graph.edge_count})
            elif self.path == "/schema":
                self._guard(engine.catalog.to_json)
            else:
                self._send(HTTPStatus.NOT_FOUND, {"error": "NotFound", "message": self.path})

        def do_POST(self):
            if self.path == "/query":
                self._guard(lambda: table_json(engine.query(self._body("cypher"))))
            elif self.path == "/ask":
                self._guard(lambda: engine.ask(self._body("question")).to_json())
            else:
                self._send(HTTPStatus.NOT_FOUND, {"error": "NotFound", "message": self.path})

    return Handler


def make_server(engine: Engine, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), make_handler(engine))
    server.daemon_threads = True
    return server


def serve_in_thread(engine: Engine, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a background thread; returns (server, thread)."""
    server = make_server(engine, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
