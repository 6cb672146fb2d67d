"""Numeric kernel backend selection.

Imports the compiled extension when it is built; otherwise falls back to the
numpy implementation. Set ``ROADPULSE_PURE_KERNELS=1`` to force the fallback
(used by the benchmark and the backend-parity tests).
"""

import os

from roadpulse._kernels import pure

if os.environ.get("ROADPULSE_PURE_KERNELS") == "1":
    _impl = pure
else:
    try:
        from roadpulse._kernels import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

haversine_m = _impl.haversine_m
haversine_arrays = _impl.haversine_arrays
idw_estimates = _impl.idw_estimates
BACKEND = _impl.BACKEND

__all__ = ["haversine_m", "haversine_arrays", "idw_estimates", "BACKEND", "pure"]
