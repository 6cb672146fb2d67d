import json
import math
import random
from pathlib import Path

import pytest

from roadpulse.geo import GeoPoint
from roadpulse.graph import RoadEdge, RoadGraph, RoadNode, Route, load_graph
from roadpulse.ingest import load_registry

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_graph():
    return load_graph(FIXTURES / "graph.json")


@pytest.fixture(scope="session")
def fixture_registry():
    return load_registry(FIXTURES / "cameras.json")


@pytest.fixture(scope="session")
def fixture_registry_raw():
    return json.loads((FIXTURES / "cameras.json").read_text())


def make_graph(node_count: int, edges: list[tuple[int, int, float]],
               default_speed: float = 77.2) -> RoadGraph:
    """Synthetic graph with abstract edge lengths (bypasses the geo sanity
    check, which only applies to documents loaded from disk)."""
    nodes = [RoadNode(i, GeoPoint(0.0, min(179.0, i * 1e-4))) for i in range(node_count)]
    road_edges = [RoadEdge(k, a, b, w, default_speed) for k, (a, b, w) in enumerate(edges)]
    return RoadGraph(nodes, road_edges, default_speed)


def line_graph(lengths: list[float], bidirectional: bool = True) -> RoadGraph:
    """0 -- 1 -- 2 ... chain with the given edge lengths."""
    edges = []
    for i, w in enumerate(lengths):
        edges.append((i, i + 1, w))
        if bidirectional:
            edges.append((i + 1, i, w))
    return make_graph(len(lengths) + 1, edges)


def line_route(g: RoadGraph, n_edges: int | None = None) -> Route:
    """The forward chain route of a line_graph."""
    forward = sorted((e for e in g.edges if e.dst == e.src + 1), key=lambda e: e.src)
    if n_edges is not None:
        forward = forward[:n_edges]
    return Route(tuple(forward), 0)


def random_connected_graph(rng: random.Random, max_nodes: int,
                           int_lengths: bool = True) -> RoadGraph:
    """Random strongly-connected-ish directed graph (spanning cycle + extras)."""
    n = rng.randint(2, max_nodes)
    order = list(range(n))
    rng.shuffle(order)
    edges = []
    length = (lambda: float(rng.randint(1, 1000))) if int_lengths else (
        lambda: rng.uniform(1.0, 1000.0))
    for a, b in zip(order, order[1:] + order[:1]):
        edges.append((a, b, length()))
    for _ in range(rng.randint(0, 2 * n)):
        a, b = rng.randrange(n), rng.randrange(n)
        if a != b:
            edges.append((a, b, length()))
    return make_graph(n, edges)


def build_scenario(registry_raw: list[dict], rng: random.Random,
                   vehicles_per_road: int = 12, duration_ms: int = 60_000) -> dict:
    """Constant-speed vehicles over the fixture cameras, 1-2 camera hops each.

    Speeds stay in [7, 18] m/s so every FoV crossing yields a track fragment
    long enough (>= 0.5 s and >= 5 samples in some window) to be counted.
    """
    cams = []
    by_road: dict[str, list[dict]] = {}
    for raw in registry_raw:
        cams.append({
            "camera_id": raw["id"],
            "route_offset_m": raw["route_offset_m"],
            "fps": 25,
            "image_width_px": raw["image_width_px"],
            "image_height_px": raw["image_height_px"],
            "meters_per_pixel": raw["meters_per_pixel"],
            "confidence": 0.9,
        })
        by_road.setdefault(raw["road_name"], []).append(raw)
    vehicles = []
    classes = ["car", "bus", "truck", "car", "motorcycle", "car"]
    for road_cams in by_road.values():
        for i in range(vehicles_per_road):
            start = rng.randrange(0, len(road_cams))
            hops = rng.choice([1, 1, 2])
            idx = list(range(start, min(start + hops, len(road_cams))))
            direction = "out" if rng.random() < 0.5 else "in"
            path = [road_cams[j]["id"] for j in (idx if direction == "out" else idx[::-1])]
            speed = 7.0 + rng.random() * 11.0
            # Entry budget: the whole path crossing must fit in the run.
            span_m = abs(road_cams[idx[-1]]["route_offset_m"]
                         - road_cams[idx[0]]["route_offset_m"]) + 40.0
            slack_ms = duration_ms - int(span_m / speed * 1000) - 2000
            vehicles.append({
                "entry_ms": rng.randrange(0, max(1, slack_ms)),
                "speed_mps": round(speed, 3),
                "direction": direction,
                "class": classes[i % len(classes)],
                "camera_path": path,
            })
    return {
        "epoch_ms": 1_700_000_000_000,
        "duration_ms": duration_ms,
        "jitter_px": 0.0,
        "cameras": cams,
        "vehicles": vehicles,
    }


def floyd_warshall(g: RoadGraph) -> list[list[float]]:
    n = max(g.nodes) + 1
    dist = [[math.inf] * n for _ in range(n)]
    for i in range(n):
        dist[i][i] = 0.0
    for e in g.edges:
        if e.length_m < dist[e.src][e.dst]:
            dist[e.src][e.dst] = e.length_m
    for k in range(n):
        dk = dist[k]
        for i in range(n):
            dik = dist[i][k]
            if dik == math.inf:
                continue
            di = dist[i]
            for j in range(n):
                alt = dik + dk[j]
                if alt < di[j]:
                    di[j] = alt
    return dist
