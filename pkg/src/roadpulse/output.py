"""Congestion color classification, GeoJSON overlays, and the HTTP surface.

Speed buckets (km/h, config-overridable): green for free flow at >= 45,
orange [30, 45), red [20, 30), brown below 20, and a distinct no-data state
so unobserved segments are never painted as free-flowing.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Sequence

from roadpulse.engine import RunResult, latency_quantiles
from roadpulse.graph import RoadGraph
from roadpulse.interpolation import SegmentEstimates

GREEN = "green"
ORANGE = "orange"
RED = "red"
BROWN = "brown"
NODATA = "nodata"


@dataclass(frozen=True)
class BucketThresholds:
    green_min_kmh: float = 45.0
    orange_min_kmh: float = 30.0
    red_min_kmh: float = 20.0


DEFAULT_BUCKETS = BucketThresholds()


def color_bucket(speed_kmh: float | None,
                 thresholds: BucketThresholds = DEFAULT_BUCKETS) -> str:
    """Total, monotone bucket mapping over speeds >= 0 plus no-data."""
    if speed_kmh is None:
        return NODATA
    if speed_kmh < 0:
        raise ValueError("speed_kmh must be >= 0")
    if speed_kmh >= thresholds.green_min_kmh:
        return GREEN
    if speed_kmh >= thresholds.orange_min_kmh:
        return ORANGE
    if speed_kmh >= thresholds.red_min_kmh:
        return RED
    return BROWN


def to_geojson(estimates: Sequence[SegmentEstimates], graph: RoadGraph,
               thresholds: BucketThresholds = DEFAULT_BUCKETS) -> dict:
    """Render segment estimates as a GeoJSON FeatureCollection.

    One LineString per inter-target span per direction; a span's speed is
    the mean of its two endpoint estimates (or the defined one). Coordinates
    are [lon, lat] and always lie on the route polyline, since every route
    vertex is itself a target point.
    """
    features = []
    for est in estimates:
        for direction in sorted(est.by_direction):
            targets = est.by_direction[direction]
            for a, b in zip(targets, targets[1:]):
                speeds = [t.congestion_speed_mps for t in (a, b)
                          if t.congestion_speed_mps is not None]
                speed_kmh = sum(speeds) / len(speeds) * 3.6 if speeds else None
                pa = graph.position_point(a.position)
                pb = graph.position_point(b.position)
                features.append({
                    "type": "Feature",
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [[pa.lon, pa.lat], [pb.lon, pb.lat]],
                    },
                    "properties": {
                        "segment_id": est.segment_id,
                        "direction": direction,
                        "speed_kmh": speed_kmh,
                        "bucket": color_bucket(speed_kmh, thresholds),
                        "ts_ms": est.window_end_ms,
                    },
                })
    return {"type": "FeatureCollection", "features": features}


class SnapshotHub:
    """Atomically swapped latest results, read by the HTTP handlers."""

    def __init__(self, graph: RoadGraph, thresholds: BucketThresholds = DEFAULT_BUCKETS):
        self.graph = graph
        self.thresholds = thresholds
        self._state: tuple[dict, dict] | None = None  # (snapshot, overlay)

    def publish(self, result: RunResult) -> None:
        overlay = to_geojson(
            sorted(result.segment_estimates.values(), key=lambda e: e.segment_id),
            self.graph, self.thresholds)
        snapshot = dict(result.snapshot)
        snapshot["latency"] = latency_quantiles(result.latencies)
        self._state = (snapshot, overlay)

    def current(self) -> tuple[dict, dict] | None:
        return self._state


class _Handler(BaseHTTPRequestHandler):
    hub: SnapshotHub  # set by serve()

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: dict, content_type="application/json"):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):  # noqa: N802 (http.server API)
        path = self.path.rstrip("/") or "/"
        if path == "/healthz":
            self._send(200, {"status": "ok"})
            return
        state = self.hub.current()
        if state is None:
            self._send(503, {"error": "no snapshot yet"})
            return
        snapshot, overlay = state
        parts = path.strip("/").split("/")
        if parts == ["metrics", "latency"]:
            self._send(200, snapshot.get("latency", {}))
        elif len(parts) == 3 and parts[0] == "roads" and parts[2] == "overlay":
            if parts[1] != snapshot["slug"]:
                self._send(404, {"error": f"unknown road {parts[1]!r}"})
            else:
                self._send(200, overlay, content_type="application/geo+json")
        elif len(parts) == 3 and parts[0] == "roads" and parts[2] == "stats":
            if parts[1] != snapshot["slug"]:
                self._send(404, {"error": f"unknown road {parts[1]!r}"})
            else:
                self._send(200, snapshot)
        elif len(parts) == 3 and parts[0] == "cameras" and parts[2] == "stats":
            cam = snapshot["cameras"].get(parts[1])
            if cam is None:
                self._send(404, {"error": f"unknown camera {parts[1]!r}"})
            else:
                self._send(200, cam)
        else:
            self._send(404, {"error": f"unknown path {self.path!r}"})


def serve(hub: SnapshotHub, addr: str = "127.0.0.1:8080") -> ThreadingHTTPServer:
    """Start the snapshot HTTP service on ``addr`` (host:port); returns the
    server (already serving on a daemon thread)."""
    host, _, port = addr.partition(":")
    handler = type("BoundHandler", (_Handler,), {"hub": hub})
    server = ThreadingHTTPServer((host, int(port or 0)), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True,
                              name="roadpulse-http")
    thread.start()
    return server
