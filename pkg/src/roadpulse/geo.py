"""Geographic primitives: WGS84 points and great-circle distance."""

from __future__ import annotations

from dataclasses import dataclass

from roadpulse._kernels import haversine_m as _haversine_kernel

# IUGG mean Earth radius.
EARTH_RADIUS_M = 6_371_008.8

METERS_PER_MILE = 1609.344
MPH_TO_MPS = METERS_PER_MILE / 3600.0


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """A WGS84 coordinate. Equality is exact field equality."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points.

    Uses the haversine formula on a sphere of radius ``EARTH_RADIUS_M``.
    Total, symmetric, and zero iff the points are equal.
    """
    return _haversine_kernel(a.lat, a.lon, b.lat, b.lon)
