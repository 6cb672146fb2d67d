"""Camera registry and the detection-track wire format.

Wire format (JSONL, one frame per line)::

    {"camera_id": "BRX-C2", "ts_ms": 1700000000000, "frame_index": 0,
     "boxes": [{"track_id": 7, "class": "car", "conf": 0.92,
                "bbox": [x, y, w, h]}],
     "pre_ms": 4.1}          # optional detector-side latency

Bounding boxes use a top-left pixel origin; kinematics converts to the
bottom-left convention internally. ``pre_ms`` is optional preprocessing
latency reported by the upstream detector.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping

from roadpulse.errors import RegistryFormatError, StreamFormatError
from roadpulse.geo import GeoPoint
from roadpulse.graph import RoadGraph, Route, project_point_to_route

VEHICLE_CLASSES = frozenset({"bus", "car", "truck", "bicycle", "motorcycle"})

# Cameras farther than this from the route are not part of the road cluster.
CAMERA_ROUTE_RADIUS_M = 100.0


@dataclass(frozen=True)
class CameraMeta:
    id: str
    point: GeoPoint
    road_name: str
    image_width_px: int
    image_height_px: int
    meters_per_pixel: float
    refresh_seconds: float
    clip_seconds: float
    nearest_node: int
    flip_direction: bool = False
    # Optional two-zone calibration for FoV perspective; both or neither.
    meters_per_pixel_near: float | None = None
    meters_per_pixel_far: float | None = None

    def __post_init__(self):
        if not 0.001 < self.meters_per_pixel < 10:
            raise ValueError(f"{self.id}: meters_per_pixel {self.meters_per_pixel} out of range")
        if self.refresh_seconds < self.clip_seconds:
            raise ValueError(f"{self.id}: refresh_seconds < clip_seconds")
        if self.refresh_seconds <= 0 or self.clip_seconds <= 0:
            raise ValueError(f"{self.id}: refresh/clip seconds must be > 0")
        if (self.meters_per_pixel_near is None) != (self.meters_per_pixel_far is None):
            raise ValueError(f"{self.id}: near/far calibration must come as a pair")


@dataclass(frozen=True, slots=True)
class TrackedBox:
    track_id: int
    cls: str
    confidence: float
    x: float
    y: float
    w: float
    h: float

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class DetectionFrame:
    camera_id: str
    ts_ms: int
    frame_index: int
    boxes: tuple[TrackedBox, ...]
    pre_ms: float | None = None


def load_registry(source) -> list[CameraMeta]:
    """Load a camera registry document (JSON array of camera objects)."""
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        doc = source
    if not isinstance(doc, list):
        raise RegistryFormatError("registry must be a JSON array")
    cameras = []
    seen: set[str] = set()
    for i, raw in enumerate(doc):
        try:
            cam = CameraMeta(
                id=str(raw["id"]),
                point=GeoPoint(float(raw["lat"]), float(raw["lon"])),
                road_name=str(raw["road_name"]),
                image_width_px=int(raw["image_width_px"]),
                image_height_px=int(raw["image_height_px"]),
                meters_per_pixel=float(raw["meters_per_pixel"]),
                refresh_seconds=float(raw["refresh_seconds"]),
                clip_seconds=float(raw["clip_seconds"]),
                nearest_node=int(raw["nearest_node"]),
                flip_direction=bool(raw.get("flip_direction", False)),
                meters_per_pixel_near=raw.get("meters_per_pixel_near"),
                meters_per_pixel_far=raw.get("meters_per_pixel_far"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise RegistryFormatError(f"camera #{i}: {exc}") from None
        if cam.id in seen:
            raise RegistryFormatError(f"duplicate camera id {cam.id}")
        seen.add(cam.id)
        cameras.append(cam)
    return cameras


def find_cameras(registry: Iterable[CameraMeta], road_name: str, route: Route,
                 graph: RoadGraph) -> list[CameraMeta]:
    """Cameras on ``road_name`` within 100 m of the route, in route order."""
    placed = []
    for cam in registry:
        if cam.road_name.lower() != road_name.lower():
            continue
        if not route.edges:
            continue
        dist, offset = project_point_to_route(graph, cam.point, route)
        if dist <= CAMERA_ROUTE_RADIUS_M:
            placed.append((offset, cam))
    placed.sort(key=lambda pair: (pair[0], pair[1].id))
    return [cam for _, cam in placed]


def _parse_box(raw, line_no: int, cam: CameraMeta | None) -> TrackedBox:
    try:
        track_id = raw["track_id"]
        cls = raw["class"]
        conf = float(raw["conf"])
        x, y, w, h = (float(v) for v in raw["bbox"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StreamFormatError(f"bad box: {exc}", line_no) from None
    if not isinstance(track_id, int):
        raise StreamFormatError(f"track_id must be an integer, got {track_id!r}", line_no)
    if cls not in VEHICLE_CLASSES:
        raise StreamFormatError(f"unknown class {cls!r}", line_no)
    if not 0.0 <= conf <= 1.0:
        raise StreamFormatError(f"confidence {conf} outside [0, 1]", line_no)
    if x < 0 or y < 0 or w <= 0 or h <= 0:
        raise StreamFormatError(f"degenerate bbox {[x, y, w, h]}", line_no)
    if cam is not None and (x + w > cam.image_width_px or y + h > cam.image_height_px):
        raise StreamFormatError(
            f"bbox {[x, y, w, h]} outside {cam.image_width_px}x{cam.image_height_px} image",
            line_no,
        )
    return TrackedBox(track_id, cls, conf, x, y, w, h)


def read_stream(source, registry: Iterable[CameraMeta] | None = None,
                on_error: Callable[[StreamFormatError], None] | None = None,
                ) -> Iterator[DetectionFrame]:
    """Decode a track JSONL stream into DetectionFrames.

    ``source`` is an iterable of lines, a path, or a file object. Schema
    violations and per-camera timestamp regressions raise StreamFormatError
    with the offending line number; pass ``on_error`` to skip bad lines
    instead (the engine uses this for fault quarantine).
    """
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text().splitlines()
    elif hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = source
    by_id = {c.id: c for c in registry} if registry is not None else {}
    last_seen: dict[str, tuple[int, int]] = {}  # camera -> (ts_ms, frame_index)

    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            frame = _parse_frame(line, line_no, by_id, last_seen)
        except StreamFormatError as err:
            if on_error is None:
                raise
            on_error(err)
            continue
        last_seen[frame.camera_id] = (frame.ts_ms, frame.frame_index)
        yield frame


def _parse_frame(line: str, line_no: int, by_id: Mapping[str, CameraMeta],
                 last_seen: Mapping[str, tuple[int, int]]) -> DetectionFrame:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise StreamFormatError(f"invalid JSON: {exc}", line_no) from None
    try:
        camera_id = str(raw["camera_id"])
        ts_ms = raw["ts_ms"]
        frame_index = raw["frame_index"]
        raw_boxes = raw["boxes"]
    except KeyError as exc:
        raise StreamFormatError(f"missing key {exc}", line_no) from None
    if not isinstance(ts_ms, int) or not isinstance(frame_index, int) or frame_index < 0:
        raise StreamFormatError("ts_ms and frame_index must be integers (frame_index >= 0)", line_no)
    prev = last_seen.get(camera_id)
    if prev is not None:
        if ts_ms <= prev[0]:
            raise StreamFormatError(
                f"timestamp regression: {ts_ms} after {prev[0]}", line_no)
        if frame_index <= prev[1]:
            raise StreamFormatError(
                f"frame_index regression: {frame_index} after {prev[1]}", line_no)
    cam = by_id.get(camera_id)
    boxes = tuple(_parse_box(b, line_no, cam) for b in raw_boxes)
    pre_ms = raw.get("pre_ms")
    if pre_ms is not None:
        pre_ms = float(pre_ms)
    return DetectionFrame(camera_id, ts_ms, frame_index, boxes, pre_ms)


def frame_to_json(frame: DetectionFrame) -> str:
    """Serialize a frame back to its wire line (canonical key order)."""
    doc = {
        "camera_id": frame.camera_id,
        "ts_ms": frame.ts_ms,
        "frame_index": frame.frame_index,
        "boxes": [
            {"track_id": b.track_id, "class": b.cls, "conf": b.confidence,
             "bbox": [b.x, b.y, b.w, b.h]}
            for b in frame.boxes
        ],
    }
    if frame.pre_ms is not None:
        doc["pre_ms"] = frame.pre_ms
    return json.dumps(doc)


def replay(frames: Iterable[DetectionFrame], pacing: bool = True,
           sleep=time.sleep) -> Iterator[DetectionFrame]:
    """Yield frames, optionally sleeping to match their timestamp deltas.

    With pacing disabled this is a plain pass-through, so downstream results
    are identical either way; pacing only shapes wall-clock emission times.
    """
    prev_ts: int | None = None
    for frame in frames:
        if pacing and prev_ts is not None and frame.ts_ms > prev_ts:
            sleep((frame.ts_ms - prev_ts) / 1000.0)
        prev_ts = frame.ts_ms
        yield frame
