"""Tumbling time windows over per-camera frame streams, and the carryover
store that projects previously seen vehicles along a road segment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from roadpulse.graph import PathPosition, Route
from roadpulse.ingest import DetectionFrame


@dataclass(frozen=True)
class TimeWindow:
    """Frames of one camera in [start_ms, end_ms). ``partial`` marks a
    trailing window the stream ended inside."""

    camera_id: str
    start_ms: int
    end_ms: int
    frames: tuple[DetectionFrame, ...]
    partial: bool = False

    @property
    def length_ms(self) -> int:
        return self.end_ms - self.start_ms


def time_window(stream: Iterable[DetectionFrame], length_s: float) -> Iterator[TimeWindow]:
    """Partition a monotone frame stream into tumbling windows.

    Windows are aligned to the first frame's timestamp, non-overlapping and
    gapless (interior empty windows are emitted so the timeline stays
    continuous). Every frame lands in exactly one window. The trailing
    window is flagged partial unless its frames cover the window length to
    within one inter-frame gap.
    """
    if length_s <= 0:
        raise ValueError("length_s must be > 0")
    length_ms = max(1, round(length_s * 1000))
    origin: int | None = None
    index = 0
    bucket: list[DetectionFrame] = []
    camera_id = ""

    def close(partial: bool) -> TimeWindow:
        start = origin + index * length_ms
        return TimeWindow(camera_id, start, start + length_ms, tuple(bucket), partial)

    for frame in stream:
        if origin is None:
            origin = frame.ts_ms
            camera_id = frame.camera_id
        while frame.ts_ms >= origin + (index + 1) * length_ms:
            yield close(partial=False)
            bucket = []
            index += 1
        bucket.append(frame)
    if origin is None:
        return
    yield close(partial=not _covers_full_length(bucket, origin + index * length_ms, length_ms))


def _covers_full_length(frames: list[DetectionFrame], start_ms: int, length_ms: int) -> bool:
    if len(frames) < 2:
        return False
    max_gap = max(b.ts_ms - a.ts_ms for a, b in zip(frames, frames[1:]))
    return (frames[-1].ts_ms - start_ms) + max_gap >= length_ms


@dataclass
class CarryoverEntry:
    """A vehicle that left a camera's FoV into the segment.

    ``origin_m`` is its route offset at departure; ``heading`` is +1 moving
    toward the route end, -1 toward the start. ``proj_speed_mps`` is clamped
    to the segment speed limit so the projected distance respects the
    physical bound; ``speed_mps`` keeps the raw estimate for metrics.
    """

    camera_id: str
    vehicle_id: int
    cls: str
    direction: str  # incoming | outgoing
    speed_mps: float
    proj_speed_mps: float
    origin_m: float
    heading: int
    departure_ms: int
    anomalous_speed: bool = False


@dataclass(frozen=True)
class CarryoverSample:
    """An active projected vehicle, usable as an interpolation sample."""

    position: PathPosition
    route_offset_m: float
    speed_mps: float
    direction: str
    camera_id: str
    vehicle_id: int


class CarryoverStore:
    """Projected vehicles for one road segment.

    Single-writer by contract (the segment's matcher); reinsertion of the
    same (camera, vehicle) replaces the stale entry so a vehicle re-observed
    in a later window is not counted twice.
    """

    def __init__(self):
        self._entries: dict[tuple[str, int], CarryoverEntry] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[CarryoverEntry]:
        return list(self._entries.values())

    def insert(self, entry: CarryoverEntry) -> None:
        self._entries[(entry.camera_id, entry.vehicle_id)] = entry

    def clear(self) -> None:
        self._entries.clear()

    def advance(self, route: Route, now_ms: int, processing_latency_s: float,
                ) -> list[CarryoverSample]:
        """Project all entries to ``now_ms`` and evict the departed ones.

        Each entry moves proj_speed x elapsed from its departure origin,
        elapsed = (now - departure) + processing latency. Entries projected
        past either segment end are evicted. Entries deposited at ``now_ms``
        itself are not yet carryover (they are that window's fresh samples)
        and are skipped.
        """
        active: list[CarryoverSample] = []
        dead: list[tuple[str, int]] = []
        for key, e in self._entries.items():
            if e.departure_ms >= now_ms:
                continue
            elapsed_s = (now_ms - e.departure_ms) / 1000.0 + processing_latency_s
            offset = e.origin_m + e.heading * e.proj_speed_mps * elapsed_s
            if not 0.0 <= offset <= route.total_length_m:
                dead.append(key)
                continue
            active.append(CarryoverSample(
                position=route.position_at(offset),
                route_offset_m=offset,
                speed_mps=e.speed_mps,
                direction=e.direction,
                camera_id=e.camera_id,
                vehicle_id=e.vehicle_id,
            ))
        for key in dead:
            del self._entries[key]
        return active


def carryover_update(store: CarryoverStore, segment: Route, now_ms: int,
                     processing_latency_s: float) -> list[CarryoverSample]:
    """Advance a segment's carryover store; returns the active samples."""
    return store.advance(segment, now_ms, processing_latency_s)
