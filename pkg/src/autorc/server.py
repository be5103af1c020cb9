"""Telemetry and control HTTP service.

Runs beside the drive loop and never blocks it: the loop publishes into
single-slot cells (latest snapshot, latest frame) and the server reads
them; teleop flows the other way through the loop's input cell. Streams
are latest-wins with a 10 Hz cap, so a stalled client skips frames
instead of building a backlog.

Endpoints (JSON unless noted):

    GET  /api/state     latest snapshot; 503 before the first tick
    POST /api/control   {mode?, recording?, teleop:{steering,throttle}?}
    GET  /api/stream    text/event-stream of snapshots, <= 10 Hz
    GET  /api/video     multipart/x-mixed-replace PNG frames, <= 10 Hz
    GET  /api/saliency  like /api/video, steering-saliency overlay
                        blended 50/50; 409 outside auto mode
    GET  /<path>        static UI files when --ui-dir is set

PNG encoding is cached per frame id, so N video clients cost one encode
per frame, not N.
"""

from __future__ import annotations

import csv
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .camera import encode_png, to_model_input
from .loop import MODES, DriveLoop, LoopError, TelemetrySnapshot
from .nn.saliency import overlay, saliency

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}


class SnapshotLog:
    """Per-run CSV of every snapshot the loop produces."""

    FIELDS = [
        "timestamp", "frame_id", "mode", "steering", "throttle", "speed",
        "encoder_ticks", "yaw_rate", "lap", "lap_time", "overruns",
        "recording", "x", "y", "heading", "progress", "lateral",
        "off_track", "blocked",
    ]

    def __init__(self, path):
        self._file = open(path, "w", newline="", encoding="utf-8")
        self._writer = csv.DictWriter(self._file, fieldnames=self.FIELDS)
        self._writer.writeheader()

    def __call__(self, snapshot: TelemetrySnapshot) -> None:
        self._writer.writerow(snapshot.to_dict())

    def close(self) -> None:
        self._file.close()


class TelemetryServer:
    """HTTP facade over one DriveLoop."""

    def __init__(self, loop: DriveLoop, host: str = "127.0.0.1", port: int = 8887,
                 ui_dir=None, stream_hz: float = 10.0):
        self.loop = loop
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        self.stream_interval = 1.0 / stream_hz
        self._stopping = threading.Event()
        self._png_lock = threading.Lock()
        self._png_cache: tuple[int, bytes] | None = None
        self._saliency_lock = threading.Lock()
        self._saliency_cache: tuple[int, bytes] | None = None

        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.0"

            def log_message(self, fmt, *args):  # quiet
                pass

            def do_GET(self):
                server._get(self)

            def do_POST(self):
                server._post(self)

        self.httpd = ThreadingHTTPServer((host, port), Handler)
        self.httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    # -- lifecycle -----------------------------------------------------

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        kwargs={"poll_interval": 0.05},
                                        daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stopping.set()
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    # -- helpers -------------------------------------------------------

    def _send_json(self, handler, code: int, obj: dict) -> None:
        body = json.dumps(obj).encode("utf-8")
        handler.send_response(code)
        handler.send_header("Content-Type", "application/json")
        handler.send_header("Content-Length", str(len(body)))
        handler.end_headers()
        handler.wfile.write(body)

    def _frame_png(self) -> tuple[int, bytes] | None:
        frame = self.loop.latest_frame
        if frame is None:
            return None
        with self._png_lock:
            cached = self._png_cache
            if cached is not None and cached[0] == frame.frame_id:
                return cached
            data = encode_png(frame.pixels)
            self._png_cache = (frame.frame_id, data)
            return self._png_cache

    def _saliency_png(self) -> tuple[int, bytes] | None:
        frame = self.loop.latest_frame
        model = self.loop.model
        if frame is None or model is None:
            return None
        with self._saliency_lock:
            cached = self._saliency_cache
            if cached is not None and cached[0] == frame.frame_id:
                return cached
            x = to_model_input(frame)
            if model.sequence_len > 1:
                x = np.repeat(x[None, ...], model.sequence_len, axis=0)
            heat = saliency(model, x)
            blended = overlay(frame.pixels, heat)
            data = encode_png(blended)
            self._saliency_cache = (frame.frame_id, data)
            return self._saliency_cache

    # -- GET routes ------------------------------------------------------

    def _get(self, handler) -> None:
        path = handler.path.split("?", 1)[0]
        if path == "/api/state":
            snap = self.loop.latest_snapshot
            if snap is None:
                self._send_json(handler, 503, {"error": "drive loop has not ticked yet"})
            else:
                self._send_json(handler, 200, snap.to_dict())
        elif path == "/api/stream":
            self._stream_snapshots(handler)
        elif path == "/api/video":
            self._stream_frames(handler, self._frame_png)
        elif path == "/api/saliency":
            if self.loop.mode != "auto":
                self._send_json(handler, 409,
                                {"error": "saliency available in auto mode only"})
            else:
                self._stream_frames(handler, self._saliency_png)
        elif self.ui_dir is not None:
            self._static(handler, path)
        else:
            self._send_json(handler, 404, {"error": f"no such path: {path}"})

    def _stream_snapshots(self, handler) -> None:
        handler.send_response(200)
        handler.send_header("Content-Type", "text/event-stream")
        handler.send_header("Cache-Control", "no-cache")
        handler.end_headers()
        last_id = -1
        try:
            while not self._stopping.is_set():
                snap = self.loop.latest_snapshot
                if snap is not None and snap.frame_id != last_id:
                    payload = json.dumps(snap.to_dict())
                    handler.wfile.write(f"data: {payload}\n\n".encode("utf-8"))
                    handler.wfile.flush()
                    last_id = snap.frame_id
                time.sleep(self.stream_interval)
        except (BrokenPipeError, ConnectionResetError, OSError):
            return

    def _stream_frames(self, handler, producer) -> None:
        boundary = "frame"
        handler.send_response(200)
        handler.send_header(
            "Content-Type", f"multipart/x-mixed-replace; boundary={boundary}"
        )
        handler.end_headers()
        last_id = -1
        try:
            while not self._stopping.is_set():
                item = producer()
                if item is not None and item[0] != last_id:
                    frame_id, data = item
                    handler.wfile.write(
                        (
                            f"--{boundary}\r\n"
                            f"Content-Type: image/png\r\n"
                            f"Content-Length: {len(data)}\r\n\r\n"
                        ).encode("ascii")
                    )
                    handler.wfile.write(data)
                    handler.wfile.write(b"\r\n")
                    handler.wfile.flush()
                    last_id = frame_id
                time.sleep(self.stream_interval)
        except (BrokenPipeError, ConnectionResetError, OSError):
            return

    def _static(self, handler, path: str) -> None:
        assert self.ui_dir is not None
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not target.is_relative_to(self.ui_dir) or not target.is_file():
            self._send_json(handler, 404, {"error": f"no such path: {path}"})
            return
        data = target.read_bytes()
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        handler.send_response(200)
        handler.send_header("Content-Type", ctype)
        handler.send_header("Content-Length", str(len(data)))
        handler.end_headers()
        handler.wfile.write(data)

    # -- POST route ------------------------------------------------------

    def _post(self, handler) -> None:
        path = handler.path.split("?", 1)[0]
        if path != "/api/control":
            self._send_json(handler, 404, {"error": f"no such path: {path}"})
            return
        try:
            length = int(handler.headers.get("Content-Length", "0"))
            raw = handler.rfile.read(length) if length else b"{}"
            body = json.loads(raw)
            if not isinstance(body, dict):
                raise ValueError("body must be a JSON object")
        except (ValueError, TypeError) as exc:
            self._send_json(handler, 400, {"error": f"malformed body: {exc}"})
            return

        ack: dict = {}
        if "mode" in body:
            mode = body["mode"]
            if not isinstance(mode, str) or mode not in MODES:
                self._send_json(
                    handler, 400,
                    {"error": f"unknown mode {mode!r} (one of {list(MODES)})"},
                )
                return
            try:
                self.loop.set_mode(mode)
            except LoopError as exc:
                self._send_json(handler, 409, {"error": str(exc)})
                return

        if "recording" in body:
            wanted = bool(body["recording"])
            applied = self.loop.set_recording(wanted)
            if wanted and not applied:
                ack["recording_ignored"] = "recording is unavailable in auto mode"

        teleop = body.get("teleop")
        if teleop is not None:
            try:
                steering = float(teleop["steering"])
                throttle = float(teleop["throttle"])
            except (KeyError, TypeError, ValueError):
                self._send_json(
                    handler, 400,
                    {"error": "teleop needs numeric steering and throttle"},
                )
                return
            if self.loop.mode == "auto":
                ack["teleop_ignored"] = "teleop has no effect in auto mode"
                ack["teleop"] = {"steering": steering, "throttle": throttle}
            else:
                s, t = self.loop.submit_teleop(steering, throttle)
                ack["teleop"] = {"steering": s, "throttle": t}

        ack["mode"] = self.loop.mode
        ack["recording"] = self.loop.recording
        self._send_json(handler, 200, ack)
