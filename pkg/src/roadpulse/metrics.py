"""Macroscopic traffic metrics, level-of-service grading, and evaluation
scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from roadpulse.kinematics import VehicleRecord

# Road capacity in vehicles per mile per the TfL Road Task Force figure.
DEFAULT_CAPACITY_PER_MILE = 900.0

LOS_GRADES = "ABCDEF"


@dataclass(frozen=True)
class TrafficStats:
    """Per-camera window statistics.

    mean_speed_kmh is None when the window held no usable vehicles (a
    distinct no-data state, never conflated with a measured 0). density and
    the derived fields are None when no segment length applies.
    """

    camera_id: str
    interval: tuple[int, int]
    count_in: int
    count_out: int
    flow_per_hour_in: float
    flow_per_hour_out: float
    mean_speed_kmh: float | None
    density_per_mile: float | None
    vc_ratio: float | None
    los: str | None

    def to_dict(self) -> dict:
        return {
            "camera_id": self.camera_id,
            "interval": list(self.interval),
            "count_in": self.count_in,
            "count_out": self.count_out,
            "flow_per_hour_in": self.flow_per_hour_in,
            "flow_per_hour_out": self.flow_per_hour_out,
            "mean_speed_kmh": self.mean_speed_kmh,
            "density_per_mile": self.density_per_mile,
            "vc_ratio": self.vc_ratio,
            "los": self.los,
        }


@dataclass(frozen=True)
class EvalScore:
    precision: float
    recall: float
    f_score: float
    error_rate_pct: float
    degenerate: bool = False  # a denominator was zero; scores defined as 0


def flow_rate(count: float, interval_s: float, target_scale_s: float = 3600.0) -> float:
    """Extrapolate a count over ``interval_s`` to ``target_scale_s``.

    20 vehicles in 10 minutes -> 120 vehicles/hour.
    """
    if interval_s <= 0:
        raise ValueError("interval_s must be > 0")
    return count * target_scale_s / interval_s


def mean_speed_kmh(records: Sequence[VehicleRecord]) -> float | None:
    """Arithmetic mean speed in km/h, or None for an empty window."""
    if not records:
        return None
    return sum(r.speed_mps for r in records) / len(records) * 3.6


def density_and_vc(count: float, segment_length_miles: float,
                   capacity_per_mile: float = DEFAULT_CAPACITY_PER_MILE,
                   ) -> tuple[float, float]:
    """Vehicles per mile and the volume/capacity ratio."""
    if segment_length_miles <= 0:
        raise ValueError("segment_length_miles must be > 0")
    if capacity_per_mile <= 0:
        raise ValueError("capacity_per_mile must be > 0")
    density = count / segment_length_miles
    return density, density / capacity_per_mile


def los_grade(vc_ratio: float) -> str:
    """Level-of-service grade A-F for a volume/capacity ratio.

    A < 0.60, B [0.60, 0.70), C [0.70, 0.80), D [0.80, 0.90), E [0.90, 1.0],
    F above 1.0. E is closed at 1.0 so F is strictly over capacity.
    """
    if vc_ratio < 0:
        raise ValueError("vc_ratio must be >= 0")
    if vc_ratio < 0.60:
        return "A"
    if vc_ratio < 0.70:
        return "B"
    if vc_ratio < 0.80:
        return "C"
    if vc_ratio < 0.90:
        return "D"
    if vc_ratio <= 1.0:
        return "E"
    return "F"


def f_score(relevant_matched: int, matched: int, relevant: int) -> EvalScore:
    """Precision/recall/F over matched events, plus the propagated error rate.

    F is the harmonic mean 2PR/(P+R). ER = (actual - approx) / actual * 100
    with actual = relevant events and approx = the relevant ones matched.
    Zero denominators yield zeros with the degenerate flag set.
    """
    if relevant_matched > matched or relevant_matched > relevant:
        raise ValueError("relevant_matched cannot exceed matched or relevant")
    degenerate = matched == 0 or relevant == 0
    precision = relevant_matched / matched if matched else 0.0
    recall = relevant_matched / relevant if relevant else 0.0
    if precision + recall > 0:
        f = 2.0 * precision * recall / (precision + recall)
    else:
        f = 0.0
        degenerate = degenerate or relevant_matched == 0
    er = (relevant - relevant_matched) / relevant * 100.0 if relevant else 0.0
    return EvalScore(precision, recall, f, er, degenerate)


def mean_f_score(scores: Sequence[float]) -> float:
    """Arithmetic mean of per-camera F-scores."""
    if not scores:
        raise ValueError("mean_f_score over empty input")
    return sum(scores) / len(scores)
