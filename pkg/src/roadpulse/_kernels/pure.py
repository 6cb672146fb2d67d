"""Pure-Python/numpy implementations of the numeric kernels.

Reference semantics for the compiled extension: `_core.pyx` mirrors these
functions exactly (modulo floating-point summation order).
"""

from __future__ import annotations

import math

import numpy as np

EARTH_RADIUS_M = 6_371_008.8

BACKEND = "pure"


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two WGS84 points."""
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def haversine_arrays(lat1, lon1, lat2, lon2):
    """Elementwise haversine over numpy arrays, in meters."""
    lat1 = np.radians(np.asarray(lat1, dtype=np.float64))
    lon1 = np.radians(np.asarray(lon1, dtype=np.float64))
    lat2 = np.radians(np.asarray(lat2, dtype=np.float64))
    lon2 = np.radians(np.asarray(lon2, dtype=np.float64))
    a = (
        np.sin((lat2 - lat1) / 2.0) ** 2
        + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(a)))


def idw_estimates(sample_offsets, sample_speeds, target_offsets, p, zero_eps=1e-6):
    """Inverse-distance-weighted speed estimates at 1-D target offsets.

    Distances are |sample_offset - target_offset| (along-route separation).
    Weights are distance^-p, computed after dividing all distances by the
    per-target minimum so large p cannot underflow the accumulator. A target
    within ``zero_eps`` of a sample takes that sample's speed exactly (the
    p -> limit of the weighted mean); the first such sample in input order
    wins. With no samples every estimate is NaN.
    """
    offsets = np.asarray(sample_offsets, dtype=np.float64)
    speeds = np.asarray(sample_speeds, dtype=np.float64)
    targets = np.asarray(target_offsets, dtype=np.float64)
    out = np.full(targets.shape, np.nan, dtype=np.float64)
    if offsets.size == 0:
        return out
    for j, t in enumerate(targets):
        d = np.abs(offsets - t)
        near = np.nonzero(d < zero_eps)[0]
        if near.size:
            out[j] = speeds[near[0]]
            continue
        w = (d / d.min()) ** (-p)
        out[j] = float(np.dot(w, speeds) / w.sum())
    return out
