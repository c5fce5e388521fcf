"""Local HTTP service backing the waypoint editor.

Three endpoints over one scenario file:
    GET  /scenario  -> current canonical JSON bytes
    PUT  /scenario  -> replace after invariant validation (422 on violation)
    POST /check     -> initialization overlap conflicts

Static editor assets are served from an optional directory. The server is
single-threaded on purpose: one request at a time keeps the scenario file
single-writer.
"""

import json
import logging
import os
import posixpath
from http.server import BaseHTTPRequestHandler, HTTPServer

from .scenario import (
    ScenarioValidationError,
    canonical_json,
    check_overlaps,
    scenario_from_dict,
    scenario_to_dict,
)

log = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class EditorService:
    """Holds the scenario state and writes accepted replacements through to
    the backing file."""

    def __init__(self, scenario_path, min_gap=6.0):
        from .scenario import load_scenario

        self.path = scenario_path
        self.min_gap = min_gap
        self.scenario = load_scenario(scenario_path)
        with open(scenario_path, "rb") as fh:
            self.raw = fh.read()

    def replace(self, body):
        try:
            data = json.loads(body.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ScenarioValidationError([f"body is not valid JSON: {exc}"])
        spec = scenario_from_dict(data)  # raises ScenarioValidationError
        payload = canonical_json(scenario_to_dict(spec))
        tmp = self.path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, self.path)
        self.scenario = spec
        self.raw = payload
        return payload

    def conflicts(self):
        return [
            {
                "vehicle_a": c.vehicle_a,
                "vehicle_b": c.vehicle_b,
                "distance": c.distance,
                "position": list(c.position),
            }
            for c in check_overlaps(self.scenario, self.min_gap)
        ]


class _Handler(BaseHTTPRequestHandler):
    service = None
    static_dir = None

    def log_message(self, fmt, *args):  # route through logging, not stderr prints
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _send(self, status, body, content_type="application/json"):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/scenario":
            self._send(200, self.service.raw)
            return
        if self.static_dir:
            rel = posixpath.normpath(self.path.lstrip("/")) or "index.html"
            if rel == ".":
                rel = "index.html"
            full = os.path.join(self.static_dir, rel)
            if os.path.isfile(full) and os.path.abspath(full).startswith(
                os.path.abspath(self.static_dir)
            ):
                ext = os.path.splitext(full)[1]
                with open(full, "rb") as fh:
                    self._send(200, fh.read(), _CONTENT_TYPES.get(ext, "application/octet-stream"))
                return
        self._send(404, b'{"error": "not found"}')

    def do_PUT(self):
        if self.path != "/scenario":
            self._send(404, b'{"error": "not found"}')
            return
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        try:
            self.service.replace(body)
        except ScenarioValidationError as exc:
            payload = json.dumps({"errors": exc.violations}).encode()
            self._send(422, payload)
            return
        self._send(200, b'{"ok": true}')

    def do_POST(self):
        if self.path != "/check":
            self._send(404, b'{"error": "not found"}')
            return
        payload = json.dumps({"conflicts": self.service.conflicts()}).encode()
        self._send(200, payload)


def serve_editor(scenario_path, port, static_dir=None, min_gap=6.0):
    """Build the single-threaded editor server; call serve_forever() on it.

    Raises OSError when the port is busy and ScenarioValidationError when the
    scenario file fails its invariants.
    """
    service = EditorService(scenario_path, min_gap)
    handler = type("BoundHandler", (_Handler,), {
        "service": service,
        "static_dir": static_dir,
    })
    try:
        server = HTTPServer(("127.0.0.1", port), handler)
    except OSError as exc:
        raise OSError(f"cannot bind editor service to port {port}: {exc}") from exc
    log.info("editor service on http://127.0.0.1:%d (scenario %s)",
             server.server_address[1], scenario_path)
    return server
