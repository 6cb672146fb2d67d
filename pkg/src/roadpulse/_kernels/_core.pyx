# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels. Semantics match `pure.py` exactly."""

from libc.math cimport sin, cos, asin, sqrt, fabs, pow, fmin

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double EARTH_RADIUS = 6371008.8
cdef double DEG2RAD = 0.017453292519943295

BACKEND = "compiled"
EARTH_RADIUS_M = EARTH_RADIUS


cpdef double haversine_m(double lat1, double lon1, double lat2, double lon2):
    """Great-circle distance in meters between two WGS84 points."""
    cdef double p1 = lat1 * DEG2RAD
    cdef double p2 = lat2 * DEG2RAD
    cdef double dp = (lat2 - lat1) * DEG2RAD
    cdef double dl = (lon2 - lon1) * DEG2RAD
    cdef double sp = sin(dp / 2.0)
    cdef double sl = sin(dl / 2.0)
    cdef double a = sp * sp + cos(p1) * cos(p2) * sl * sl
    return 2.0 * EARTH_RADIUS * asin(fmin(1.0, sqrt(a)))


def haversine_arrays(lat1, lon1, lat2, lon2):
    """Elementwise haversine over numpy arrays, in meters."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a1 = np.ascontiguousarray(lat1, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o1 = np.ascontiguousarray(lon1, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a2 = np.ascontiguousarray(lat2, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o2 = np.ascontiguousarray(lon2, dtype=np.float64).ravel()
    cdef Py_ssize_t n = a1.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = haversine_m(a1[i], o1[i], a2[i], o2[i])
    return out


def idw_estimates(sample_offsets, sample_speeds, target_offsets, double p, double zero_eps=1e-6):
    """Inverse-distance-weighted speed estimates at 1-D target offsets.

    See `pure.idw_estimates` for the semantics contract.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] offs = np.ascontiguousarray(sample_offsets, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] spd = np.ascontiguousarray(sample_speeds, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tgt = np.ascontiguousarray(target_offsets, dtype=np.float64).ravel()
    cdef Py_ssize_t n = offs.shape[0]
    cdef Py_ssize_t m = tgt.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.full(m, np.nan, dtype=np.float64)
    if n == 0:
        return out
    cdef Py_ssize_t i, j, hit
    cdef double t, d, dmin, w, wsum, wspd
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dist = np.empty(n, dtype=np.float64)
    for j in range(m):
        t = tgt[j]
        dmin = -1.0
        hit = -1
        for i in range(n):
            d = fabs(offs[i] - t)
            dist[i] = d
            if d < zero_eps:
                hit = i
                break
            if dmin < 0.0 or d < dmin:
                dmin = d
        if hit >= 0:
            out[j] = spd[hit]
            continue
        wsum = 0.0
        wspd = 0.0
        for i in range(n):
            w = pow(dist[i] / dmin, -p)
            wsum += w
            wspd += w * spd[i]
        out[j] = wspd / wsum
    return out
