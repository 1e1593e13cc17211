"""HTTP query endpoint over a loaded index.

JSON over HTTP, two routes:

    GET  /health  -> {"status": "ready", "objects", "views", "dim"}
                     or 503 {"status": "loading"} before an index is attached
    POST /query   -> body {"views": [[...], ...], "strategy": <name>, "topk": <int>}
                     response {"results": [{"object_id", "category", "distance"}],
                               "strategy", "took_ms"}

Errors carry {"error": {"code": <machine-readable>, "message": <text>}}.
The index is immutable once attached, so requests are served concurrently
without locking; shutdown waits for in-flight requests.
"""

import json
import os
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .core import STORAGE_DTYPE, normalize_rows
from .errors import MvsError, UnknownStrategyError, ZeroVectorError
from .fusion import FusionStrategy
from .index import Database, Query, load_index, rank

DEFAULT_TOPK = 20
BIND_ENV_VAR = "MVS_BIND"


class RequestRejected(Exception):
    """Client error carrying an HTTP status and a machine-readable code."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


def _parse_request(body: bytes, dim: int) -> tuple:
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as e:
        raise RequestRejected(400, "bad_json", f"request body is not valid JSON: {e}")
    if not isinstance(payload, dict):
        raise RequestRejected(400, "bad_request", "request body must be a JSON object")

    views = payload.get("views")
    if views is None:
        raise RequestRejected(400, "missing_views", "request must carry a 'views' list")
    if not isinstance(views, list) or len(views) == 0:
        raise RequestRejected(400, "empty_views", "'views' must be a nonempty list of vectors")
    try:
        matrix = np.asarray(views, dtype=STORAGE_DTYPE)
    except (TypeError, ValueError):
        raise RequestRejected(400, "bad_view", "'views' must hold numeric vectors")
    if matrix.ndim != 2:
        raise RequestRejected(400, "bad_view", "'views' must hold equal-length numeric vectors")
    if not np.all(np.isfinite(matrix)):
        raise RequestRejected(400, "bad_view", "'views' must hold finite values")
    if matrix.shape[1] != dim:
        raise RequestRejected(
            400, "dimension_mismatch",
            f"view dim {matrix.shape[1]} does not match index dim {dim}",
        )

    name = payload.get("strategy", FusionStrategy.LF_MIN.value)
    if not isinstance(name, str):
        raise RequestRejected(400, "unknown_strategy", "'strategy' must be a string")
    try:
        strategy = FusionStrategy.parse(name)
    except UnknownStrategyError as e:
        raise RequestRejected(400, "unknown_strategy", str(e))

    topk = payload.get("topk", DEFAULT_TOPK)
    if not isinstance(topk, int) or isinstance(topk, bool) or topk < 1:
        raise RequestRejected(400, "bad_topk", "'topk' must be a positive integer")

    try:
        matrix = normalize_rows(matrix)
    except ZeroVectorError as e:
        raise RequestRejected(400, "zero_vector", str(e))
    return matrix, strategy, topk


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_payload(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error": {"code": code, "message": message}})

    def do_GET(self):
        if self.path != "/health":
            self._send_error_payload(404, "not_found", f"no route for {self.path}")
            return
        db = self.server.db
        if db is None:
            self._send_json(503, {"status": "loading"})
            return
        self._send_json(
            200,
            {"status": "ready", "objects": len(db), "views": db.total_views, "dim": db.dim},
        )

    def do_POST(self):
        if self.path != "/query":
            self._send_error_payload(404, "not_found", f"no route for {self.path}")
            return
        db = self.server.db
        if db is None:
            self._send_error_payload(503, "not_ready", "index is still loading")
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            body = self.rfile.read(length)
            matrix, strategy, topk = _parse_request(body, db.dim)
            t0 = time.perf_counter()
            ranked = rank(db, Query("http", matrix), strategy, k=topk)
            took_ms = (time.perf_counter() - t0) * 1000.0
        except RequestRejected as e:
            self._send_error_payload(e.status, e.code, str(e))
            return
        except UnknownStrategyError as e:
            # single-view restriction lands here
            self._send_error_payload(400, "unknown_strategy", str(e))
            return
        except MvsError as e:
            self._send_error_payload(400, "bad_request", str(e))
            return
        except Exception as e:  # pragma: no cover - defensive
            self._send_error_payload(500, "internal", f"{type(e).__name__}: {e}")
            return
        self._send_json(
            200,
            {
                "results": [
                    {
                        "object_id": item.object_id,
                        "category": db.category_of(item.object_id),
                        "distance": item.distance,
                    }
                    for item in ranked
                ],
                "strategy": strategy.value,
                "took_ms": took_ms,
            },
        )


class QueryServer(ThreadingHTTPServer):
    """Threading HTTP server holding one immutable database (or None)."""

    daemon_threads = False
    block_on_close = True

    def __init__(self, address, db: Database = None):
        super().__init__(address, _Handler)
        self.db = db


def create_server(db: Database = None, host: str = None, port: int = 0) -> QueryServer:
    """Build a server; port 0 picks a free port. Caller runs serve_forever."""
    if host is None:
        host = os.environ.get(BIND_ENV_VAR, "127.0.0.1")
    return QueryServer((host, port), db)


def serve(index_path, port: int, host: str = None) -> None:
    """Load an index and serve it until interrupted."""
    db = load_index(index_path)
    server = create_server(db, host=host, port=port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
