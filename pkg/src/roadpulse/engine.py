"""Subscription orchestration: camera pipelines, segment matchers, snapshots.

Two execution paths share one processing core:

* ``Engine.run_once`` replays pre-captured frame batches deterministically
  (identical inputs produce byte-identical snapshots); this is the mode the
  acceptance suite and the CLI's replay path use.
* ``EngineRuntime`` runs per-camera worker threads connected to a single
  aggregator through bounded drop-oldest queues, for live/paced feeds.

Shared read-only state: graph, registry, config. Shared mutable state: each
segment's carryover store and the published snapshot, both written only by
the aggregation step (single writer), snapshot swapped atomically.
"""

from __future__ import annotations

import itertools
import json
import statistics
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from roadpulse.errors import StreamFormatError, ValidationError
from roadpulse.geo import METERS_PER_MILE
from roadpulse.graph import RoadGraph, Route, shortest_path
from roadpulse.ingest import CameraMeta, DetectionFrame, read_stream
from roadpulse.interpolation import (
    DEFAULT_IDW_P,
    DEFAULT_PROCESSING_LATENCY_S,
    DEFAULT_TARGET_SPACING_M,
    SegmentEstimates,
    congestion_segment,
)
from roadpulse.kinematics import (
    DEFAULT_JITTER_PX,
    INCOMING,
    OUTGOING,
    STATIONARY,
    Calibration,
    VehicleRecord,
    count_by_direction,
    window_records,
)
from roadpulse.metrics import (
    DEFAULT_CAPACITY_PER_MILE,
    TrafficStats,
    density_and_vc,
    flow_rate,
    los_grade,
    mean_speed_kmh,
)
from roadpulse.veql import INTERPOLATION_OPERATORS, QueryAst, validate_against
from roadpulse.windowing import CarryoverStore, TimeWindow, time_window


@dataclass
class EngineConfig:
    idw_p: float = DEFAULT_IDW_P
    target_spacing_m: float = DEFAULT_TARGET_SPACING_M
    processing_latency_s: float = DEFAULT_PROCESSING_LATENCY_S
    # Live runs may refresh processing_latency_s from the measured operator
    # median; replay keeps it pinned so reruns stay byte-identical.
    adaptive_latency: bool = False
    adaptive_latency_refresh_s: float = 60.0
    window_cap_s: float = 60.0
    queue_windows: int = 10
    quarantine_threshold: int = 3
    snapshot_retention: int = 16
    capacity_per_mile: float = DEFAULT_CAPACITY_PER_MILE
    jitter_px: float = DEFAULT_JITTER_PX
    snapshot_log: str | None = None

    @classmethod
    def from_file(cls, path) -> "EngineConfig":
        return cls(**json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class LatencyRecord:
    preprocessing_ms: float
    operator_ms: float
    total_ms: float


@dataclass
class Segment:
    id: str
    cam_a: CameraMeta
    cam_b: CameraMeta
    route: Route
    store: CarryoverStore = field(default_factory=CarryoverStore)


@dataclass
class Subscription:
    id: str
    ast: QueryAst
    cameras: tuple[CameraMeta, ...]
    segments: list[Segment]
    state: str = "running"  # running | stopped

    def segments_of(self, camera_id: str) -> list[Segment]:
        return [s for s in self.segments
                if camera_id in (s.cam_a.id, s.cam_b.id)]


def road_slug(road_name: str) -> str:
    return road_name.lower().replace(" ", "-")


def latency_quantiles(latencies: Sequence[LatencyRecord]) -> dict:
    """p50/p90/p99 of each latency stage, in milliseconds."""
    def q(values: list[float]) -> dict:
        if not values:
            return {"p50": None, "p90": None, "p99": None}
        vs = sorted(values)
        pick = lambda f: vs[min(len(vs) - 1, int(f * len(vs)))]
        return {"p50": statistics.median(vs), "p90": pick(0.90), "p99": pick(0.99)}

    return {
        "preprocessing_ms": q([l.preprocessing_ms for l in latencies]),
        "operator_ms": q([l.operator_ms for l in latencies]),
        "total_ms": q([l.total_ms for l in latencies]),
        "samples": len(latencies),
    }


@dataclass
class RunResult:
    snapshot: dict
    segment_estimates: dict[str, SegmentEstimates]
    records_by_camera: dict[str, list[VehicleRecord]]
    stats_by_camera: dict[str, list[TrafficStats]]
    latencies: list[LatencyRecord]
    faulty_cameras: set[str]
    dropped_windows: int

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot, sort_keys=True)


class _CameraState:
    """Cumulative per-camera aggregates across windows."""

    def __init__(self):
        self.direction_of: dict[int, str] = {}
        self.speeds: list[float] = []
        self.windows = 0
        self.status = "no-data"

    def absorb(self, records: Sequence[VehicleRecord]):
        self.windows += 1
        self.status = "ok"
        for r in records:
            self.speeds.append(r.speed_mps)
            prev = self.direction_of.get(r.vehicle_id)
            if prev is None or prev == STATIONARY:
                self.direction_of[r.vehicle_id] = r.direction

    def cumulative(self) -> dict:
        dirs = list(self.direction_of.values())
        return {
            "count_in": dirs.count(INCOMING),
            "count_out": dirs.count(OUTGOING),
            "count_stationary": dirs.count(STATIONARY),
            "mean_speed_kmh": (sum(self.speeds) / len(self.speeds) * 3.6
                               if self.speeds else None),
            "windows": self.windows,
        }


class _SubscriptionState:
    """The single-writer processing core shared by replay and live modes."""

    def __init__(self, engine: "Engine", sub: Subscription):
        self.engine = engine
        self.sub = sub
        self.cameras = {c.id: c for c in sub.cameras}
        self.cam_state = {c.id: _CameraState() for c in sub.cameras}
        self.stats_by_camera: dict[str, list[TrafficStats]] = {c.id: [] for c in sub.cameras}
        self.records_by_camera: dict[str, list[VehicleRecord]] = {c.id: [] for c in sub.cameras}
        self.latest_stats: dict[str, TrafficStats] = {}
        self.segment_estimates: dict[str, SegmentEstimates] = {}
        self.records_at: dict[tuple[str, int], list[VehicleRecord]] = {}
        self.latencies: list[LatencyRecord] = []
        self.faulty: set[str] = set()
        self.dropped_windows = 0
        self.generated_ms = 0
        self._latency_s = engine.config.processing_latency_s
        self._last_latency_refresh = time.monotonic()
        # Density is measured over the camera's forward segment (backward
        # for the last camera); single-camera roads have no length to use.
        self._density_miles: dict[str, float | None] = {}
        for i, cam in enumerate(sub.cameras):
            seg = None
            if i < len(sub.segments):
                seg = sub.segments[i]
            elif sub.segments:
                seg = sub.segments[-1]
            self._density_miles[cam.id] = (
                seg.route.total_length_m / METERS_PER_MILE if seg else None)

    def mark_faulty(self, camera_id: str):
        self.faulty.add(camera_id)
        self.cam_state[camera_id].status = "faulty"

    def compute_records(self, camera: CameraMeta, window: TimeWindow) -> list[VehicleRecord]:
        cal = Calibration(
            meters_per_pixel=camera.meters_per_pixel,
            near_mpp=camera.meters_per_pixel_near,
            far_mpp=camera.meters_per_pixel_far,
        )
        return window_records(
            window, cal,
            image_height_px=camera.image_height_px,
            image_width_px=camera.image_width_px,
            confidence_min=self.sub.ast.confidence_min,
            classes=self.sub.ast.object_classes,
            jitter_px=self.engine.config.jitter_px,
            max_speed_mps=self.engine.graph.default_max_speed_kmh / 3.6,
            flip_direction=camera.flip_direction,
        )

    def process_event(self, camera: CameraMeta, window: TimeWindow,
                      records: list[VehicleRecord], op_start: float) -> None:
        """Absorb one closed window and republish the snapshot."""
        cfg = self.engine.config
        cid = camera.id
        self.records_at[(cid, window.end_ms)] = records
        self.records_by_camera[cid].extend(records)
        self.cam_state[cid].absorb(records)
        self.generated_ms = max(self.generated_ms, window.end_ms)

        counts = count_by_direction(records)
        interval_s = window.length_ms / 1000.0
        density = vc = None
        los = None
        miles = self._density_miles[cid]
        if miles:
            density, vc = density_and_vc(len(records), miles, cfg.capacity_per_mile)
            los = los_grade(vc)
        stats = TrafficStats(
            camera_id=cid,
            interval=(window.start_ms, window.end_ms),
            count_in=counts[INCOMING],
            count_out=counts[OUTGOING],
            flow_per_hour_in=flow_rate(counts[INCOMING], interval_s),
            flow_per_hour_out=flow_rate(counts[OUTGOING], interval_s),
            mean_speed_kmh=mean_speed_kmh(records),
            density_per_mile=density,
            vc_ratio=vc,
            los=los,
        )
        self.stats_by_camera[cid].append(stats)
        self.latest_stats[cid] = stats

        if self.sub.ast.operator in INTERPOLATION_OPERATORS:
            for seg in self.sub.segments_of(cid):
                recs_a = self.records_at.get((seg.cam_a.id, window.end_ms), [])
                recs_b = self.records_at.get((seg.cam_b.id, window.end_ms), [])
                self.segment_estimates[seg.id] = congestion_segment(
                    self.engine.graph, seg.cam_a, seg.cam_b, seg.route,
                    recs_a, recs_b, seg.store, window.end_ms,
                    idw_p=cfg.idw_p,
                    target_spacing_m=cfg.target_spacing_m,
                    processing_latency_s=self._latency_s,
                )

        pre_values = [f.pre_ms for f in window.frames if f.pre_ms is not None]
        pre_ms = sum(pre_values) / len(pre_values) if pre_values else 0.0
        op_ms = (time.perf_counter() - op_start) * 1000.0
        self.latencies.append(LatencyRecord(pre_ms, op_ms, pre_ms + op_ms))
        self._maybe_refresh_latency()

    def _maybe_refresh_latency(self):
        cfg = self.engine.config
        if not cfg.adaptive_latency or not self.latencies:
            return
        now = time.monotonic()
        if now - self._last_latency_refresh >= cfg.adaptive_latency_refresh_s:
            self._latency_s = statistics.median(
                l.operator_ms for l in self.latencies) / 1000.0
            self._last_latency_refresh = now

    def snapshot(self) -> dict:
        ast = self.sub.ast
        cameras = {}
        for cid, state in self.cam_state.items():
            latest = self.latest_stats.get(cid)
            cameras[cid] = {
                "status": state.status,
                "latest": latest.to_dict() if latest else None,
                "cumulative": state.cumulative(),
            }
        segments = {}
        if ast.operator in INTERPOLATION_OPERATORS:
            for seg_id, est in sorted(self.segment_estimates.items()):
                segments[seg_id] = {
                    "camera_a": est.camera_a,
                    "camera_b": est.camera_b,
                    "window_end_ms": est.window_end_ms,
                    "length_m": est.route.total_length_m,
                    "directions": {
                        direction: [
                            {
                                "offset_m": t.route_offset_m,
                                "speed_kmh": (None if t.congestion_speed_mps is None
                                              else t.congestion_speed_mps * 3.6),
                                "sample_count": t.sample_count,
                            }
                            for t in targets
                        ]
                        for direction, targets in sorted(est.by_direction.items())
                    },
                }
        return {
            "road": ast.road_name,
            "slug": road_slug(ast.road_name),
            "operator": ast.operator.value,
            "window_seconds": ast.window_seconds,
            "generated_ms": self.generated_ms,
            "cameras": cameras,
            "segments": segments,
            "faulty_cameras": sorted(self.faulty),
            "dropped_windows": self.dropped_windows,
        }

    def result(self) -> RunResult:
        return RunResult(
            snapshot=self.snapshot(),
            segment_estimates=dict(self.segment_estimates),
            records_by_camera=self.records_by_camera,
            stats_by_camera=self.stats_by_camera,
            latencies=self.latencies,
            faulty_cameras=set(self.faulty),
            dropped_windows=self.dropped_windows,
        )


class _QuarantineStream(Exception):
    """Raised internally when a camera crosses the error threshold."""


def _coerce_frames(source, registry, threshold: int) -> tuple[list[DetectionFrame], bool]:
    """Materialize a camera's frames; True flags a quarantined stream.

    Accepts already-decoded frames, raw JSONL lines, paths or file objects.
    Quarantine trips after ``threshold`` consecutive schema/timestamp errors.
    """
    if not isinstance(source, (str, Path)) and not hasattr(source, "read"):
        items = list(source)
        if not items:
            return [], False
        if isinstance(items[0], DetectionFrame):
            return items, False
        source = items  # raw JSONL lines

    consecutive = 0

    def on_error(err: StreamFormatError):
        nonlocal consecutive
        consecutive += 1
        if consecutive >= threshold:
            raise _QuarantineStream from err

    frames: list[DetectionFrame] = []
    try:
        for frame in read_stream(source, registry=registry, on_error=on_error):
            consecutive = 0
            frames.append(frame)
    except _QuarantineStream:
        return frames, True
    return frames, False


class Engine:
    def __init__(self, graph: RoadGraph, registry: Sequence[CameraMeta],
                 config: EngineConfig | None = None):
        self.graph = graph
        self.registry = list(registry)
        self.config = config or EngineConfig()
        self._subs: dict[str, Subscription] = {}
        self._counter = itertools.count(1)

    def register(self, ast: QueryAst) -> Subscription:
        """Validate and spawn a subscription: one pipeline slot per camera,
        one matcher (carryover store) per adjacent camera pair."""
        if ast.window_seconds > self.config.window_cap_s:
            raise ValidationError(
                f"window {ast.window_seconds} s exceeds cap {self.config.window_cap_s} s")
        spec = validate_against(ast, self.registry, self.graph)
        segments = []
        for a, b in zip(spec.cameras, spec.cameras[1:]):
            route = shortest_path(self.graph, a.nearest_node, b.nearest_node)
            segments.append(Segment(id=f"{a.id}->{b.id}", cam_a=a, cam_b=b, route=route))
        sub = Subscription(
            id=f"sub-{next(self._counter):04d}",
            ast=ast,
            cameras=spec.cameras,
            segments=segments,
        )
        self._subs[sub.id] = sub
        return sub

    def stop(self, sub_id: str) -> None:
        sub = self._subs.pop(sub_id, None)
        if sub is not None:
            sub.state = "stopped"
            for seg in sub.segments:
                seg.store.clear()

    def run_once(self, sub: Subscription, frames_by_camera: Mapping[str, object],
                 ) -> RunResult:
        """Deterministic batch replay of captured per-camera streams.

        Window-close events are processed in (end_ms, camera_id) order;
        malformed streams are quarantined after the configured number of
        consecutive errors without disturbing the other cameras.
        """
        state = _SubscriptionState(self, sub)
        events: list[tuple[int, str, CameraMeta, TimeWindow]] = []
        for cam in sub.cameras:
            source = frames_by_camera.get(cam.id)
            if source is None:
                continue
            frames, quarantined = _coerce_frames(
                source, self.registry, self.config.quarantine_threshold)
            if quarantined:
                state.mark_faulty(cam.id)
                continue
            for w in time_window(frames, sub.ast.window_seconds):
                events.append((w.end_ms, cam.id, cam, w))
        events.sort(key=lambda e: (e[0], e[1]))
        for _, _, cam, window in events:
            op_start = time.perf_counter()
            records = state.compute_records(cam, window)
            state.process_event(cam, window, records, op_start)
        result = state.result()
        self._append_snapshot_log(result)
        return result

    def _append_snapshot_log(self, result: RunResult):
        if self.config.snapshot_log:
            with open(self.config.snapshot_log, "a") as fh:
                fh.write(result.snapshot_json() + "\n")


class BoundedWindowQueue:
    """Drop-oldest bounded queue between a camera pipeline and the aggregator."""

    def __init__(self, maxsize: int):
        self.maxsize = maxsize
        self._items: deque = deque()
        self._lock = threading.Lock()
        self._ready = threading.Condition(self._lock)
        self.dropped = 0
        self._closed = False

    def put(self, item) -> None:
        with self._ready:
            if len(self._items) >= self.maxsize:
                self._items.popleft()
                self.dropped += 1
            self._items.append(item)
            self._ready.notify()

    def get(self, timeout: float | None = None):
        with self._ready:
            if not self._items and not self._closed:
                self._ready.wait(timeout)
            if self._items:
                return self._items.popleft()
            return None

    def close(self):
        with self._ready:
            self._closed = True
            self._ready.notify_all()

    @property
    def closed(self) -> bool:
        with self._lock:
            return self._closed and not self._items

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


class EngineRuntime:
    """Threaded live pipeline: one worker per camera feeding an aggregator.

    Workers do windowing and kinematics in parallel; the aggregator is the
    single writer of carryover stores and the published snapshot. Snapshot
    reads are lock-free (atomic reference swap).
    """

    def __init__(self, engine: Engine, sub: Subscription):
        self.engine = engine
        self.sub = sub
        self.state = _SubscriptionState(engine, sub)
        self.queues = {c.id: BoundedWindowQueue(engine.config.queue_windows)
                       for c in sub.cameras}
        self._snapshot: dict | None = None
        self._history: deque = deque(maxlen=engine.config.snapshot_retention)
        self._threads: list[threading.Thread] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()

    def start(self, sources: Mapping[str, Iterable[DetectionFrame]]):
        for cam in self.sub.cameras:
            source = sources.get(cam.id)
            if source is None:
                self.queues[cam.id].close()
                continue
            t = threading.Thread(
                target=self._camera_worker, args=(cam, source), daemon=True,
                name=f"roadpulse-cam-{cam.id}")
            t.start()
            self._threads.append(t)
        agg = threading.Thread(target=self._aggregator, daemon=True,
                               name="roadpulse-aggregator")
        agg.start()
        self._threads.append(agg)

    def _camera_worker(self, cam: CameraMeta, source):
        consecutive = 0

        def on_error(err: StreamFormatError):
            nonlocal consecutive
            consecutive += 1
            if consecutive >= self.engine.config.quarantine_threshold:
                raise _QuarantineStream from err

        def frames():
            nonlocal consecutive
            it = iter(source) if not isinstance(source, (str, Path)) else None
            if it is not None:
                first = next(it, None)
                if first is None:
                    return
                if isinstance(first, DetectionFrame):
                    yield first
                    yield from it
                    return
                raw = itertools.chain([first], it)
            else:
                raw = source
            for frame in read_stream(raw, registry=self.engine.registry,
                                     on_error=on_error):
                consecutive = 0
                yield frame

        try:
            for window in time_window(frames(), self.sub.ast.window_seconds):
                if self._stop.is_set():
                    break
                records = self.state.compute_records(cam, window)
                self.queues[cam.id].put((cam, window, records, time.perf_counter()))
        except _QuarantineStream:
            self.queues[cam.id].put((cam, None, None, None))  # faulty marker
        finally:
            self.queues[cam.id].close()

    def _aggregator(self):
        open_queues = dict(self.queues)
        while open_queues and not self._stop.is_set():
            progressed = False
            for cid, q in list(open_queues.items()):
                item = q.get(timeout=0.05)
                if item is None:
                    if q.closed:
                        del open_queues[cid]
                    continue
                progressed = True
                cam, window, records, op_start = item
                with self._lock:
                    if window is None:
                        self.state.mark_faulty(cam.id)
                    else:
                        self.state.process_event(cam, window, records, op_start)
                    self.state.dropped_windows = sum(
                        q.dropped for q in self.queues.values())
                    self._snapshot = self.state.snapshot()
                    self._history.append(self._snapshot)
            if not progressed:
                time.sleep(0.001)
        with self._lock:
            self.state.dropped_windows = sum(q.dropped for q in self.queues.values())
            self._snapshot = self.state.snapshot()

    def snapshot(self) -> dict | None:
        return self._snapshot

    def history(self) -> list[dict]:
        """Most recent published snapshots, newest last (bounded by
        snapshot_retention)."""
        with self._lock:
            return list(self._history)

    def alive(self) -> bool:
        return any(t.is_alive() for t in self._threads)

    def result(self) -> RunResult:
        with self._lock:
            return self.state.result()

    def join(self, timeout: float | None = None):
        deadline = None if timeout is None else time.monotonic() + timeout
        for t in self._threads:
            t.join(None if deadline is None else max(0.0, deadline - time.monotonic()))

    def stop(self):
        self._stop.set()
        for q in self.queues.values():
            q.close()
