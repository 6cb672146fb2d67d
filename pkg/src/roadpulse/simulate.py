"""Synthetic ground-truth traffic generator.

Renders constant-speed vehicles moving along a road axis into per-camera
detection-track streams, together with the ground-truth record needed to
score the engine against known speeds, directions and counts.

Scenario document (JSON)::

    {"epoch_ms": 1700000000000,
     "duration_ms": 20000,                # optional; inferred when omitted
     "jitter_px": 0.0,                    # centroid noise, 0 = clean
     "cameras": [{"camera_id": "BRX-C2", "route_offset_m": 370.0, "fps": 25,
                  "image_width_px": 352, "image_height_px": 288,
                  "meters_per_pixel": 0.1, "confidence": 0.9}],
     "vehicles": [{"entry_ms": 500, "speed_mps": 11.0, "direction": "out",
                   "class": "car", "camera_path": ["BRX-C2", "BRX-C3"]}]}

A camera's field of view spans ``image_height_px * meters_per_pixel`` meters
of road centred on its route offset. Vehicles travelling "out" move toward
larger offsets and render with their bottom-left-origin y increasing, which
kinematics reads as outgoing; "in" is the mirror case.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from roadpulse.errors import ScenarioError
from roadpulse.ingest import DetectionFrame, TrackedBox, VEHICLE_CLASSES

# Rendered box size per class, pixels (w, h).
BOX_SIZES = {
    "car": (36.0, 24.0),
    "bus": (56.0, 36.0),
    "truck": (50.0, 32.0),
    "motorcycle": (20.0, 16.0),
    "bicycle": (16.0, 14.0),
}

LANE_X_FRACTION = {"out": 0.35, "in": 0.65}


@dataclass(frozen=True)
class SimCamera:
    camera_id: str
    route_offset_m: float
    fps: float
    image_width_px: int
    image_height_px: int
    meters_per_pixel: float
    confidence: float = 0.9

    @property
    def fov_m(self) -> float:
        return self.image_height_px * self.meters_per_pixel

    @property
    def fov_low_m(self) -> float:
        return self.route_offset_m - self.fov_m / 2.0


@dataclass(frozen=True)
class SimVehicle:
    entry_ms: int
    speed_mps: float
    direction: str  # "out" | "in"
    cls: str
    camera_path: tuple[str, ...]


@dataclass
class TruthVehicle:
    index: int
    cls: str
    direction: str
    speed_mps: float
    visibility: dict[str, tuple[int, int]] = field(default_factory=dict)
    track_ids: dict[str, int] = field(default_factory=dict)

    @property
    def engine_direction(self) -> str:
        return "outgoing" if self.direction == "out" else "incoming"


@dataclass
class GroundTruth:
    vehicles: list[TruthVehicle]

    def counts(self, camera_id: str) -> dict[str, int]:
        out = {"incoming": 0, "outgoing": 0}
        for v in self.vehicles:
            if camera_id in v.visibility:
                out[v.engine_direction] += 1
        return out

    def speed_of_track(self, camera_id: str, track_id: int) -> float | None:
        for v in self.vehicles:
            if v.track_ids.get(camera_id) == track_id:
                return v.speed_mps
        return None


def load_scenario(source) -> dict:
    if isinstance(source, (str, Path)):
        return json.loads(Path(source).read_text())
    if hasattr(source, "read"):
        return json.load(source)
    return source


def _parse_scenario(doc: dict) -> tuple[list[SimCamera], list[SimVehicle], int, int, float]:
    try:
        cameras = [
            SimCamera(
                camera_id=str(c["camera_id"]),
                route_offset_m=float(c["route_offset_m"]),
                fps=float(c["fps"]),
                image_width_px=int(c["image_width_px"]),
                image_height_px=int(c["image_height_px"]),
                meters_per_pixel=float(c["meters_per_pixel"]),
                confidence=float(c.get("confidence", 0.9)),
            )
            for c in doc["cameras"]
        ]
        vehicles = [
            SimVehicle(
                entry_ms=int(v["entry_ms"]),
                speed_mps=float(v["speed_mps"]),
                direction=str(v["direction"]),
                cls=str(v["class"]),
                camera_path=tuple(str(cid) for cid in v["camera_path"]),
            )
            for v in doc["vehicles"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario document: {exc}") from None
    epoch_ms = int(doc.get("epoch_ms", 1_700_000_000_000))
    duration_ms = doc.get("duration_ms")
    jitter_px = float(doc.get("jitter_px", 0.0))
    cam_ids = {c.camera_id for c in cameras}
    for v in vehicles:
        if v.cls not in VEHICLE_CLASSES:
            raise ScenarioError(f"unknown vehicle class {v.cls!r}")
        if v.direction not in ("out", "in"):
            raise ScenarioError(f"direction must be 'out' or 'in', got {v.direction!r}")
        if v.speed_mps < 0:
            raise ScenarioError("speed_mps must be >= 0")
        if not v.camera_path:
            raise ScenarioError("camera_path must be non-empty")
        missing = [cid for cid in v.camera_path if cid not in cam_ids]
        if missing:
            raise ScenarioError(f"camera_path references unknown cameras {missing}")
    by_id = {c.camera_id: c for c in cameras}
    for v in vehicles:
        offsets = [by_id[cid].route_offset_m for cid in v.camera_path]
        ordered = offsets == sorted(offsets) if v.direction == "out" else offsets == sorted(offsets, reverse=True)
        if not ordered:
            raise ScenarioError(
                f"camera_path offsets not monotone for direction {v.direction!r}: {offsets}")
        for cid in v.camera_path:
            cam = by_id[cid]
            if v.speed_mps / cam.fps / cam.meters_per_pixel >= cam.image_height_px:
                raise ScenarioError(
                    f"vehicle at {v.speed_mps} m/s crosses {cid} in under one frame")
    if duration_ms is None:
        duration_ms = _infer_duration(by_id, vehicles)
    return cameras, vehicles, epoch_ms, int(duration_ms), jitter_px


def _axis_start(v: SimVehicle, cam: SimCamera) -> float:
    if v.speed_mps == 0:
        return cam.route_offset_m
    return cam.fov_low_m if v.direction == "out" else cam.fov_low_m + cam.fov_m


def _infer_duration(by_id: dict[str, SimCamera], vehicles: list[SimVehicle]) -> int:
    end = 1000
    for v in vehicles:
        if v.speed_mps == 0:
            end = max(end, v.entry_ms + 10_000)
            continue
        first, last = by_id[v.camera_path[0]], by_id[v.camera_path[-1]]
        span = abs(last.route_offset_m - first.route_offset_m) + last.fov_m
        end = max(end, v.entry_ms + int(span / v.speed_mps * 1000) + 1000)
    return end


def simulate(scenario, seed: int = 0) -> tuple[dict[str, list[DetectionFrame]], GroundTruth]:
    """Render a scenario into per-camera frame streams plus ground truth.

    Deterministic for a fixed seed. In clean scenarios (jitter 0) the
    rendered centroids move at exactly speed / meters_per_pixel px/s, so
    kinematics can recover speeds to float precision.
    """
    doc = load_scenario(scenario)
    cameras, vehicles, epoch_ms, duration_ms, jitter_px = _parse_scenario(doc)
    rng = random.Random(seed)
    by_id = {c.camera_id: c for c in cameras}
    starts = [_axis_start(v, by_id[v.camera_path[0]]) for v in vehicles]
    truth = GroundTruth([
        TruthVehicle(i, v.cls, v.direction, v.speed_mps) for i, v in enumerate(vehicles)
    ])
    frames_by_camera: dict[str, list[DetectionFrame]] = {}

    for cam in cameras:
        next_track_id = 1
        interval_ms = 1000.0 / cam.fps
        n_frames = int(duration_ms / interval_ms)
        frames: list[DetectionFrame] = []
        for k in range(n_frames):
            t_rel = round(k * interval_ms)
            boxes: list[TrackedBox] = []
            for vi, v in enumerate(vehicles):
                if cam.camera_id not in v.camera_path:
                    continue
                box = _render(cam, v, starts[vi], t_rel, rng, jitter_px)
                if box is None:
                    continue
                tv = truth.vehicles[vi]
                tid = tv.track_ids.get(cam.camera_id)
                if tid is None:
                    tid = next_track_id
                    next_track_id += 1
                    tv.track_ids[cam.camera_id] = tid
                enter, _ = tv.visibility.get(cam.camera_id, (epoch_ms + t_rel, 0))
                tv.visibility[cam.camera_id] = (enter, epoch_ms + t_rel)
                boxes.append(TrackedBox(tid, v.cls, cam.confidence, *box))
            frames.append(DetectionFrame(cam.camera_id, epoch_ms + t_rel, k, tuple(boxes)))
        frames_by_camera[cam.camera_id] = frames
    return frames_by_camera, truth


def _render(cam: SimCamera, v: SimVehicle, start_pos: float, t_rel_ms: int,
            rng: random.Random, jitter_px: float) -> tuple[float, float, float, float] | None:
    """Bounding box (top-left x, y, w, h) of the vehicle at ``cam``, or None."""
    if t_rel_ms < v.entry_ms:
        return None
    sign = 1.0 if v.direction == "out" else -1.0
    pos = start_pos + sign * v.speed_mps * (t_rel_ms - v.entry_ms) / 1000.0
    w, h = BOX_SIZES[v.cls]
    y_bl = (pos - cam.fov_low_m) / cam.meters_per_pixel
    if jitter_px:
        y_bl += rng.uniform(-jitter_px, jitter_px)
    if not h / 2.0 <= y_bl <= cam.image_height_px - h / 2.0:
        return None
    x_center = cam.image_width_px * LANE_X_FRACTION[v.direction]
    if jitter_px:
        x_center += rng.uniform(-jitter_px, jitter_px)
    y_top = cam.image_height_px - y_bl - h / 2.0
    x_left = x_center - w / 2.0
    if x_left < 0 or x_left + w > cam.image_width_px:
        return None
    return (x_left, y_top, w, h)
