"""Lane-gap pixel calibration from a vehicle-free background frame.

Canny edges feed a probabilistic Hough transform; near-vertical line
segments cluster into lane-line x positions. The pixel gap between the two
dominant lines is measured separately in the upper and lower image halves
and averaged, absorbing the FoV scale change with distance. Dividing the
known real lane width by that gap gives meters/pixel.

The reference width must be a plausible trunk-road lane (2.5-4.0 m per the
DMRB cross-section tables); anything else is rejected rather than silently
producing an implausible scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

LANE_WIDTH_MIN_M = 2.5
LANE_WIDTH_MAX_M = 4.0

# Hough segments more than ~11 degrees off vertical are not lane candidates
# in a top-front road view.
MAX_SLOPE = 0.2
CLUSTER_GAP_PX = 6.0


class NoLaneCandidatesError(RuntimeError):
    """Edge detection found no usable lane lines; enter the gap manually."""


class CalibrationRejectedError(ValueError):
    """Reference width outside permissible lane widths."""


@dataclass(frozen=True)
class CalibrationResult:
    lane_pixel_gap_px: float
    reference_gap_m: float
    meters_per_pixel: float
    gap_upper_px: float
    gap_lower_px: float

    def registry_patch(self, camera_id: str | None = None) -> dict:
        """Fragment to merge into the engine's camera registry document."""
        patch = {
            "meters_per_pixel": self.meters_per_pixel,
            "lane_pixel_gap_px": self.lane_pixel_gap_px,
            "reference_gap_m": self.reference_gap_m,
        }
        if camera_id is not None:
            patch["id"] = camera_id
        return patch


def _vertical_line_xs(gray: np.ndarray) -> list[float]:
    """x positions (at mid-height) of near-vertical Hough segments."""
    edges = cv2.Canny(gray, 60, 160)
    segments = cv2.HoughLinesP(edges, 1, np.pi / 180, threshold=25,
                               minLineLength=gray.shape[0] // 4, maxLineGap=8)
    if segments is None or len(segments) == 0:
        return []
    xs = []
    for x1, y1, x2, y2 in np.asarray(segments).reshape(-1, 4):
        dy = y2 - y1
        if dy == 0:
            continue
        if abs(x2 - x1) / abs(dy) > MAX_SLOPE:
            continue
        xs.append((x1 + x2) / 2.0)
    return sorted(xs)


def _cluster(xs: list[float]) -> list[float]:
    """Merge x positions closer than CLUSTER_GAP_PX into their means."""
    clusters: list[list[float]] = []
    for x in xs:
        if clusters and x - clusters[-1][-1] <= CLUSTER_GAP_PX:
            clusters[-1].append(x)
        else:
            clusters.append([x])
    return [sum(c) / len(c) for c in clusters]


def _dominant_gap(gray: np.ndarray) -> float | None:
    centers = _cluster(_vertical_line_xs(gray))
    if len(centers) < 2:
        return None
    # Adjacent pair with the widest support: lane lines are the two
    # dominant verticals, so take the largest adjacent spacing.
    gaps = [b - a for a, b in zip(centers, centers[1:])]
    return max(gaps)


def measure_lane_gap_px(image: np.ndarray) -> tuple[float, float, float]:
    """(mean, upper-half, lower-half) pixel gaps between lane lines."""
    if image.ndim == 3:
        image = cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)
    h = image.shape[0]
    upper = _dominant_gap(image[: h // 2])
    lower = _dominant_gap(image[h // 2:])
    if upper is None and lower is None:
        raise NoLaneCandidatesError(
            "no lane-line candidates found; measure the gap manually")
    if upper is None:
        upper = lower
    if lower is None:
        lower = upper
    return (upper + lower) / 2.0, upper, lower


def calibrate_camera(background_frame: np.ndarray,
                     reference_gap_m: float) -> CalibrationResult:
    """Propose a meters/pixel calibration from lane geometry.

    Raises NoLaneCandidatesError when the frame yields no lane lines (the
    caller falls back to manual entry) and CalibrationRejectedError when the
    reference width is outside DMRB lane-width limits.
    """
    if not LANE_WIDTH_MIN_M <= reference_gap_m <= LANE_WIDTH_MAX_M:
        raise CalibrationRejectedError(
            f"reference gap {reference_gap_m} m outside permissible lane width "
            f"[{LANE_WIDTH_MIN_M}, {LANE_WIDTH_MAX_M}] m")
    gap, upper, lower = measure_lane_gap_px(background_frame)
    return CalibrationResult(
        lane_pixel_gap_px=round(float(gap), 3),
        reference_gap_m=float(reference_gap_m),
        meters_per_pixel=float(reference_gap_m / gap),
        gap_upper_px=float(upper),
        gap_lower_px=float(lower),
    )


def manual_calibration(lane_pixel_gap_px: float,
                       reference_gap_m: float) -> CalibrationResult:
    """Operator-supplied gap (the fallback when detection finds nothing)."""
    if lane_pixel_gap_px <= 0:
        raise ValueError("lane_pixel_gap_px must be positive")
    if not LANE_WIDTH_MIN_M <= reference_gap_m <= LANE_WIDTH_MAX_M:
        raise CalibrationRejectedError(
            f"reference gap {reference_gap_m} m outside permissible lane width "
            f"[{LANE_WIDTH_MIN_M}, {LANE_WIDTH_MAX_M}] m")
    return CalibrationResult(
        lane_pixel_gap_px=lane_pixel_gap_px,
        reference_gap_m=reference_gap_m,
        meters_per_pixel=reference_gap_m / lane_pixel_gap_px,
        gap_upper_px=lane_pixel_gap_px,
        gap_lower_px=lane_pixel_gap_px,
    )


def write_patch(result: CalibrationResult, out_path: str,
                camera_id: str | None = None) -> None:
    Path(out_path).write_text(
        json.dumps(result.registry_patch(camera_id), indent=2) + "\n")
