"""roadpulse: near-real-time traffic estimation over road-camera streams."""

from roadpulse._kernels import BACKEND as KERNEL_BACKEND
from roadpulse.engine import Engine, EngineConfig, EngineRuntime
from roadpulse.geo import GeoPoint, haversine_m
from roadpulse.graph import load_graph, shortest_path
from roadpulse.ingest import load_registry, read_stream
from roadpulse.veql import parse_query

__version__ = "0.1.0"

__all__ = [
    "Engine",
    "EngineConfig",
    "EngineRuntime",
    "GeoPoint",
    "KERNEL_BACKEND",
    "haversine_m",
    "load_graph",
    "load_registry",
    "parse_query",
    "read_stream",
    "shortest_path",
    "__version__",
]
