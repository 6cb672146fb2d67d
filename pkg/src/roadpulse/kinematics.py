"""Per-vehicle property extraction: direction, physical speed, counts.

Pixel geometry convention: the wire format is top-left origin; direction
logic works in a bottom-left origin (y_bl = image_height - y_topleft), where
an approaching vehicle's y decreases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from roadpulse.errors import CalibrationError, TrackTooShortError
from roadpulse.windowing import TimeWindow

# Tracks shorter than this are tracker flicker, not vehicles.
MIN_TRACK_SAMPLES = 5
MIN_TRACK_SPAN_S = 0.5

# Permissible lane widths for trunk roads (DMRB cross-section tables).
LANE_WIDTH_MIN_M = 2.5
LANE_WIDTH_MAX_M = 4.0

DEFAULT_JITTER_PX = 8.0

INCOMING = "incoming"
OUTGOING = "outgoing"
STATIONARY = "stationary"


@dataclass(frozen=True)
class Track:
    """One vehicle's centroid trace inside a window.

    samples: (ts_ms, centroid_x_px, centroid_y_px, confidence), top-left
    origin, strictly increasing timestamps.
    """

    track_id: int
    cls: str
    samples: tuple[tuple[int, float, float, float], ...]

    def __post_init__(self):
        if not self.samples:
            raise ValueError("track needs at least one sample")
        ts = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("track timestamps must strictly increase")

    @property
    def span_s(self) -> float:
        return (self.samples[-1][0] - self.samples[0][0]) / 1000.0


@dataclass(frozen=True)
class VehicleRecord:
    """Per-vehicle output of one window.

    ``lane_direction`` is the travel direction implied by lane position
    (outgoing keeps the left half of the frame); it gives stationary
    vehicles a direction binding so queued traffic still lands in the right
    interpolation partition.
    """

    vehicle_id: int
    cls: str
    direction: str
    speed_mps: float
    camera_id: str
    window_end_ms: int
    anomalous_speed: bool = False
    lane_direction: str | None = None

    @property
    def travel_direction(self) -> str:
        """incoming/outgoing, falling back to the lane heuristic when stationary."""
        if self.direction != STATIONARY:
            return self.direction
        return self.lane_direction or OUTGOING


@dataclass(frozen=True)
class Calibration:
    """Pixel-to-meter scale, with provenance when derived from lane geometry.

    ``near_mpp``/``far_mpp`` optionally split the image into a lower (near)
    and upper (far) zone by centroid height to absorb FoV perspective; the
    single scalar is used otherwise.
    """

    meters_per_pixel: float
    lane_pixel_gap_px: float | None = None
    reference_gap_m: float | None = None
    near_mpp: float | None = None
    far_mpp: float | None = None

    def scale_for(self, mean_y_bl: float, image_height_px: float) -> float:
        if self.near_mpp is None or self.far_mpp is None:
            return self.meters_per_pixel
        return self.near_mpp if mean_y_bl < image_height_px / 2.0 else self.far_mpp


def calibrate(lane_pixel_gap_px: float, reference_gap_m: float) -> Calibration:
    """Derive meters/pixel from a measured lane gap and its real width.

    The reference width must be a plausible trunk-road lane (2.5-4.0 m), else
    the calibration is rejected.
    """
    if lane_pixel_gap_px <= 0 or reference_gap_m <= 0:
        raise CalibrationError("gap measurements must be positive")
    if not LANE_WIDTH_MIN_M <= reference_gap_m <= LANE_WIDTH_MAX_M:
        raise CalibrationError(
            f"reference gap {reference_gap_m} m outside permissible lane width "
            f"[{LANE_WIDTH_MIN_M}, {LANE_WIDTH_MAX_M}] m")
    return Calibration(
        meters_per_pixel=reference_gap_m / lane_pixel_gap_px,
        lane_pixel_gap_px=lane_pixel_gap_px,
        reference_gap_m=reference_gap_m,
    )


def build_tracks(window: TimeWindow, confidence_min: float,
                 classes: Iterable[str]) -> list[Track]:
    """Group a window's boxes into per-vehicle tracks.

    Boxes below the confidence floor or outside the class filter are
    dropped; tracks with fewer than MIN_TRACK_SAMPLES samples are discarded
    as flicker. Ordered by track id for determinism.
    """
    wanted = set(classes)
    grouped: dict[int, list[tuple[int, float, float, float]]] = {}
    cls_of: dict[int, str] = {}
    for frame in window.frames:
        for box in frame.boxes:
            if box.confidence < confidence_min or box.cls not in wanted:
                continue
            cx, cy = box.centroid
            grouped.setdefault(box.track_id, []).append(
                (frame.ts_ms, cx, cy, box.confidence))
            cls_of[box.track_id] = box.cls
    return [
        Track(tid, cls_of[tid], tuple(samples))
        for tid, samples in sorted(grouped.items())
        if len(samples) >= MIN_TRACK_SAMPLES
    ]


def estimate_direction(track: Track, image_height_px: float,
                       jitter_px: float = DEFAULT_JITTER_PX) -> str:
    """Direction from the net bottom-left-origin y displacement.

    Decreasing y (beyond the jitter threshold) is incoming traffic,
    increasing is outgoing, anything inside the threshold is stationary.
    """
    if len(track.samples) < 2:
        raise TrackTooShortError("direction needs at least two samples")
    y_first = image_height_px - track.samples[0][2]
    y_last = image_height_px - track.samples[-1][2]
    dy = y_last - y_first
    if dy < -jitter_px:
        return INCOMING
    if dy > jitter_px:
        return OUTGOING
    return STATIONARY


def estimate_speed(track: Track, cal: Calibration,
                   image_height_px: float | None = None) -> float:
    """Speed in m/s from first-to-last centroid displacement.

    distance = speed x time: Euclidean pixel displacement scaled by the
    calibration, divided by the elapsed span. Requires >= 2 samples covering
    at least MIN_TRACK_SPAN_S.
    """
    if len(track.samples) < 2:
        raise TrackTooShortError("speed needs at least two samples")
    span = track.span_s
    if span < MIN_TRACK_SPAN_S:
        raise TrackTooShortError(f"span {span:.3f} s below {MIN_TRACK_SPAN_S} s")
    t0, x0, y0, _ = track.samples[0]
    t1, x1, y1, _ = track.samples[-1]
    displacement_px = math.hypot(x1 - x0, y1 - y0)
    scale = cal.meters_per_pixel
    if image_height_px is not None and cal.near_mpp is not None:
        ys = [image_height_px - s[2] for s in track.samples]
        scale = cal.scale_for(sum(ys) / len(ys), image_height_px)
    return displacement_px * scale / span


def window_records(window: TimeWindow, cal: Calibration, image_height_px: float,
                   image_width_px: float, confidence_min: float,
                   classes: Iterable[str], jitter_px: float = DEFAULT_JITTER_PX,
                   max_speed_mps: float | None = None,
                   flip_direction: bool = False) -> list[VehicleRecord]:
    """Full per-window kinematics: tracks -> VehicleRecords.

    Tracks whose time span is too short for a trusted speed are skipped
    (they reappear in an adjacent window with a usable span). Speeds above
    ``max_speed_mps`` are kept raw but flagged anomalous.
    """
    records = []
    for track in build_tracks(window, confidence_min, classes):
        try:
            speed = estimate_speed(track, cal, image_height_px)
        except TrackTooShortError:
            continue
        direction = estimate_direction(track, image_height_px, jitter_px)
        x_mean = sum(s[1] for s in track.samples) / len(track.samples)
        lane = OUTGOING if x_mean < image_width_px / 2.0 else INCOMING
        if flip_direction:
            if direction != STATIONARY:
                direction = INCOMING if direction == OUTGOING else OUTGOING
            lane = INCOMING if lane == OUTGOING else OUTGOING
        records.append(VehicleRecord(
            vehicle_id=track.track_id,
            cls=track.cls,
            direction=direction,
            speed_mps=speed,
            camera_id=window.camera_id,
            window_end_ms=window.end_ms,
            anomalous_speed=max_speed_mps is not None and speed > max_speed_mps,
            lane_direction=lane,
        ))
    return records


def count_by_direction(records: Sequence[VehicleRecord]) -> dict[str, int]:
    """Partition counts; the three buckets always sum to len(records)."""
    counts = {INCOMING: 0, OUTGOING: 0, STATIONARY: 0}
    for r in records:
        counts[r.direction] += 1
    return counts
