"""Network-based inverse-distance-weighted congestion estimation.

Fresh vehicle observations sit at their camera's end of the segment route;
vehicles seen in earlier windows are projected along the segment by the
carryover store. At every target point between the cameras the expected
local speed is the distance-decay weighted mean of the sample speeds, per
direction. Distances are along-route network separations, not crow-flight.

Congestion classes are derived downstream from low speed; interpolating the
speed field keeps the weighted mean dimensionally coherent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from roadpulse._kernels import idw_estimates
from roadpulse.graph import PathPosition, Route, route_target_points
from roadpulse.kinematics import INCOMING, OUTGOING, VehicleRecord
from roadpulse.windowing import CarryoverEntry, CarryoverSample, CarryoverStore

DEFAULT_IDW_P = 2.0
DEFAULT_TARGET_SPACING_M = 50.0
DEFAULT_PROCESSING_LATENCY_S = 2.0

# Below this separation a target is "at" a sample and takes its speed (the
# limit of the weighted mean as distance -> 0).
ZERO_DISTANCE_EPS_M = 1e-6


@dataclass(frozen=True)
class CongestionSample:
    """(position, speed) contribution of one vehicle, fresh or carryover."""

    position: PathPosition
    route_offset_m: float
    speed_mps: float
    source: str  # "fresh" | "carryover"
    direction: str  # incoming | outgoing


@dataclass(frozen=True)
class TargetEstimate:
    position: PathPosition
    route_offset_m: float
    congestion_speed_mps: float | None  # None = no data
    sample_count: int


def place_samples(records_cam_a: Sequence[VehicleRecord],
                  records_cam_b: Sequence[VehicleRecord],
                  carryover: Sequence[CarryoverSample],
                  route: Route) -> list[CongestionSample]:
    """Position fresh and carryover vehicles on the segment route.

    ``route`` runs from camera A to camera B, so A's fresh records sit at
    offset 0 and B's at the route end; camera FoV depth is below target
    spacing, so the endpoint simplification is below resolution. Carryover
    samples keep their projected positions.
    """
    samples: list[CongestionSample] = []
    length = route.total_length_m
    for records, offset in ((records_cam_a, 0.0), (records_cam_b, length)):
        for r in records:
            samples.append(CongestionSample(
                position=route.position_at(offset),
                route_offset_m=offset,
                speed_mps=r.speed_mps,
                source="fresh",
                direction=r.travel_direction,
            ))
    for c in carryover:
        samples.append(CongestionSample(
            position=c.position,
            route_offset_m=c.route_offset_m,
            speed_mps=c.speed_mps,
            source="carryover",
            direction=c.direction,
        ))
    return samples


def nbidw(samples: Sequence[CongestionSample], target: PathPosition,
          p: float = DEFAULT_IDW_P) -> TargetEstimate:
    """Inverse-distance-weighted speed estimate at one target point."""
    if p <= 0:
        raise ValueError("decay exponent p must be > 0")
    route = target.route
    if route is None:
        raise ValueError("target position must carry its route")
    t_off = route.offset_of(target)
    est = idw_estimates(
        [s.route_offset_m for s in samples],
        [s.speed_mps for s in samples],
        [t_off], p, ZERO_DISTANCE_EPS_M,
    )[0]
    return TargetEstimate(
        position=target,
        route_offset_m=t_off,
        congestion_speed_mps=None if math.isnan(est) else float(est),
        sample_count=len(samples),
    )


def estimate_targets(samples: Sequence[CongestionSample],
                     targets: Sequence[PathPosition], route: Route,
                     p: float = DEFAULT_IDW_P) -> list[TargetEstimate]:
    """Vectorized nbidw over a whole target list (one kernel call)."""
    if p <= 0:
        raise ValueError("decay exponent p must be > 0")
    t_offs = [route.offset_of(t) for t in targets]
    ests = idw_estimates(
        [s.route_offset_m for s in samples],
        [s.speed_mps for s in samples],
        t_offs, p, ZERO_DISTANCE_EPS_M,
    )
    return [
        TargetEstimate(
            position=t,
            route_offset_m=off,
            congestion_speed_mps=None if math.isnan(e) else float(e),
            sample_count=len(samples),
        )
        for t, off, e in zip(targets, t_offs, ests)
    ]


@dataclass(frozen=True)
class SegmentEstimates:
    """Per-direction congestion field over one camera-pair segment."""

    segment_id: str
    camera_a: str
    camera_b: str
    route: Route
    targets: tuple[PathPosition, ...]
    by_direction: dict[str, list[TargetEstimate]]
    window_end_ms: int


def congestion_segment(graph, cam_a, cam_b, route: Route,
                       records_a: Sequence[VehicleRecord],
                       records_b: Sequence[VehicleRecord],
                       store: CarryoverStore, now_ms: int,
                       idw_p: float = DEFAULT_IDW_P,
                       target_spacing_m: float = DEFAULT_TARGET_SPACING_M,
                       processing_latency_s: float = DEFAULT_PROCESSING_LATENCY_S,
                       max_speed_mps: float | None = None,
                       ) -> SegmentEstimates:
    """One congestion-operator pass over the segment between two cameras.

    Steps: enumerate target points on the route, collect active carryover,
    place fresh samples at the camera endpoints, run the per-direction
    weighted estimate at every target, then deposit this window's departing
    vehicles into the carryover store for the next pass.
    """
    if not route.edges:
        raise ValueError("segment route is empty")
    if max_speed_mps is None:
        max_speed_mps = graph.default_max_speed_kmh / 3.6
    targets = route_target_points(route, target_spacing_m)
    actives = store.advance(route, now_ms, processing_latency_s)
    samples = place_samples(records_a, records_b, actives, route)

    by_direction: dict[str, list[TargetEstimate]] = {}
    for direction in (INCOMING, OUTGOING):
        dir_samples = [s for s in samples if s.direction == direction]
        by_direction[direction] = estimate_targets(dir_samples, targets, route, idw_p)

    # Vehicles heading into the segment become carryover for later windows:
    # A's down-route traffic projects forward from offset 0, B's up-route
    # traffic projects backward from the far end.
    length = route.total_length_m
    for records, direction, origin, heading in (
            (records_a, OUTGOING, 0.0, 1),
            (records_b, INCOMING, length, -1)):
        for r in records:
            if r.travel_direction != direction:
                continue
            store.insert(CarryoverEntry(
                camera_id=r.camera_id,
                vehicle_id=r.vehicle_id,
                cls=r.cls,
                direction=direction,
                speed_mps=r.speed_mps,
                proj_speed_mps=min(r.speed_mps, max_speed_mps),
                origin_m=origin,
                heading=heading,
                departure_ms=r.window_end_ms,
                anomalous_speed=r.speed_mps > max_speed_mps,
            ))
    return SegmentEstimates(
        segment_id=f"{cam_a.id}->{cam_b.id}",
        camera_a=cam_a.id,
        camera_b=cam_b.id,
        route=route,
        targets=tuple(targets),
        by_direction=by_direction,
        window_end_ms=now_ms,
    )
