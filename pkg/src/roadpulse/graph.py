"""Road-network graph: loading, shortest paths, and positions along routes.

The graph document is JSON with shape::

    {"default_max_speed_kmh": 77.2,
     "nodes": [{"id": 1, "lat": 51.48, "lon": -0.11}, ...],
     "edges": [{"from": 1, "to": 2, "length_m": 120.0, "max_speed_kmh": 64.0?}, ...]}

Edges are directed; bidirectional roads carry one edge per direction.
"""

from __future__ import annotations

import heapq
import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

from roadpulse.errors import GraphFormatError, NoRouteError
from roadpulse.geo import GeoPoint, haversine_m

# Edge length must stay within this factor band of the endpoint great-circle
# distance (catches unit mistakes and node/edge mismatches at load time).
LENGTH_SANITY_LOW = 0.5
LENGTH_SANITY_HIGH = 2.0


@dataclass(frozen=True, slots=True)
class RoadNode:
    id: int
    point: GeoPoint


@dataclass(frozen=True, slots=True)
class RoadEdge:
    """One directed edge. ``key`` is unique within its graph."""

    key: int
    src: int
    dst: int
    length_m: float
    max_speed_kmh: float

    def undirected_key(self) -> tuple[int, int, float]:
        a, b = sorted((self.src, self.dst))
        return (a, b, self.length_m)


@dataclass(frozen=True)
class Route:
    """An ordered edge walk; consecutive edges share a node."""

    edges: tuple[RoadEdge, ...]
    start_node: int

    def __post_init__(self):
        prev = self.start_node
        for e in self.edges:
            if e.src != prev:
                raise ValueError(f"route edges do not chain at node {prev}")
            prev = e.dst

    @property
    def end_node(self) -> int:
        return self.edges[-1].dst if self.edges else self.start_node

    @property
    def total_length_m(self) -> float:
        return self.cum_lengths[-1]

    @cached_property
    def cum_lengths(self) -> tuple[float, ...]:
        """cum_lengths[i] = route distance at the start of edge i."""
        acc = [0.0]
        for e in self.edges:
            acc.append(acc[-1] + e.length_m)
        return tuple(acc)

    @cached_property
    def _edge_index(self) -> dict[int, int]:
        return {e.key: i for i, e in enumerate(self.edges)}

    def offset_of(self, pos: PathPosition) -> float:
        """Route distance from the start to ``pos``. ``pos`` must lie on the route."""
        idx = self._edge_index.get(pos.edge.key)
        if idx is None:
            raise ValueError(f"position edge {pos.edge.key} not on route")
        return self.cum_lengths[idx] + pos.offset_m

    def position_at(self, route_offset_m: float) -> PathPosition:
        """Position at a route distance in [0, total_length_m]."""
        if not self.edges:
            raise ValueError("empty route has no positions")
        if not 0.0 <= route_offset_m <= self.total_length_m + 1e-9:
            raise ValueError(f"offset {route_offset_m} outside route")
        i = bisect_right(self.cum_lengths, route_offset_m) - 1
        if i >= len(self.edges):  # exactly at the route end
            i = len(self.edges) - 1
        off = min(route_offset_m - self.cum_lengths[i], self.edges[i].length_m)
        return PathPosition(self.edges[i], off, self)


@dataclass(frozen=True)
class PathPosition:
    """A point on an edge, ``offset_m`` from the edge's source node."""

    edge: RoadEdge
    offset_m: float
    route: Route | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.offset_m <= self.edge.length_m + 1e-9:
            raise ValueError(
                f"offset {self.offset_m} outside edge of length {self.edge.length_m}"
            )


class RoadGraph:
    """Immutable after construction; safe for concurrent reads."""

    def __init__(self, nodes: Iterable[RoadNode], edges: Iterable[RoadEdge],
                 default_max_speed_kmh: float):
        self.nodes: dict[int, RoadNode] = {n.id: n for n in nodes}
        self.edges: tuple[RoadEdge, ...] = tuple(edges)
        self.default_max_speed_kmh = default_max_speed_kmh
        self._out: dict[int, list[RoadEdge]] = {nid: [] for nid in self.nodes}
        self._und: dict[int, list[tuple[int, float]]] = {nid: [] for nid in self.nodes}
        for e in self.edges:
            self._out[e.src].append(e)
            self._und[e.src].append((e.dst, e.length_m))
            self._und[e.dst].append((e.src, e.length_m))
        for lst in self._out.values():
            lst.sort(key=lambda e: (e.dst, e.length_m, e.key))

    def node(self, node_id: int) -> RoadNode:
        return self.nodes[node_id]

    def out_edges(self, node_id: int) -> list[RoadEdge]:
        return self._out[node_id]

    def position_point(self, pos: PathPosition) -> GeoPoint:
        """Geographic point of a path position (linear along the edge)."""
        a = self.nodes[pos.edge.src].point
        b = self.nodes[pos.edge.dst].point
        t = pos.offset_m / pos.edge.length_m if pos.edge.length_m else 0.0
        return GeoPoint(a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t)


def load_graph(source) -> RoadGraph:
    """Load and validate a road-graph document.

    ``source`` may be a parsed mapping, a JSON string/Path, or a file object.
    Raises GraphFormatError on malformed documents, dangling edge endpoints,
    non-positive lengths, or lengths outside the haversine sanity band.
    """
    doc = _read_document(source)
    if not isinstance(doc, Mapping):
        raise GraphFormatError("graph document must be a JSON object")
    try:
        default_speed = float(doc["default_max_speed_kmh"])
        raw_nodes = doc["nodes"]
        raw_edges = doc["edges"]
    except KeyError as exc:
        raise GraphFormatError(f"missing top-level key {exc}") from None
    if default_speed <= 0:
        raise GraphFormatError("default_max_speed_kmh must be > 0")

    nodes: list[RoadNode] = []
    seen: set[int] = set()
    for i, rn in enumerate(raw_nodes):
        try:
            nid = rn["id"]
            point = GeoPoint(float(rn["lat"]), float(rn["lon"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphFormatError(f"node #{i}: {exc}") from None
        if not isinstance(nid, int):
            raise GraphFormatError(f"node #{i}: id must be an integer")
        if nid in seen:
            raise GraphFormatError(f"duplicate node id {nid}")
        seen.add(nid)
        nodes.append(RoadNode(nid, point))
    by_id = {n.id: n for n in nodes}

    edges: list[RoadEdge] = []
    for i, re in enumerate(raw_edges):
        try:
            src, dst = re["from"], re["to"]
            length = float(re["length_m"])
            speed = float(re.get("max_speed_kmh", default_speed))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphFormatError(f"edge #{i}: {exc}") from None
        if src not in by_id or dst not in by_id:
            raise GraphFormatError(f"edge #{i}: dangling endpoint {src}->{dst}")
        if length <= 0:
            raise GraphFormatError(f"edge #{i}: non-positive length {length}")
        if speed <= 0:
            raise GraphFormatError(f"edge #{i}: non-positive max speed {speed}")
        crow = haversine_m(by_id[src].point, by_id[dst].point)
        if not (LENGTH_SANITY_LOW * crow <= length <= LENGTH_SANITY_HIGH * crow):
            raise GraphFormatError(
                f"edge #{i}: length {length:.1f} m outside sanity band of "
                f"great-circle distance {crow:.1f} m"
            )
        edges.append(RoadEdge(i, src, dst, length, speed))
    return RoadGraph(nodes, edges, default_speed)


def _read_document(source):
    if isinstance(source, Mapping):
        return source
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    elif hasattr(source, "read"):
        text = source.read()
    else:
        raise GraphFormatError(f"unsupported graph source type {type(source)!r}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON: {exc}") from None


def shortest_path(g: RoadGraph, src: int, dst: int) -> Route:
    """Minimal-length directed route from ``src`` to ``dst`` (Dijkstra).

    Ties are broken deterministically by preferring the smaller next-node id
    during relaxation. Raises NoRouteError when ``dst`` is unreachable.
    """
    if src not in g.nodes or dst not in g.nodes:
        raise ValueError(f"unknown node in ({src}, {dst})")
    if src == dst:
        return Route((), src)
    dist: dict[int, float] = {src: 0.0}
    prev_edge: dict[int, RoadEdge] = {}
    heap: list[tuple[float, int]] = [(0.0, src)]
    done: set[int] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            break
        for e in g.out_edges(u):
            nd = d + e.length_m
            old = dist.get(e.dst)
            if old is None or nd < old or (nd == old and u < prev_edge[e.dst].src):
                dist[e.dst] = nd
                prev_edge[e.dst] = e
                heapq.heappush(heap, (nd, e.dst))
    if dst not in prev_edge:
        raise NoRouteError(f"no route from {src} to {dst}")
    chain: list[RoadEdge] = []
    node = dst
    while node != src:
        e = prev_edge[node]
        chain.append(e)
        node = e.src
    chain.reverse()
    return Route(tuple(chain), src)


def _undirected_multisource(g: RoadGraph, sources: dict[int, float]) -> dict[int, float]:
    """Dijkstra over the undirected view from several seed nodes."""
    dist = dict(sources)
    heap = [(d, n) for n, d in sources.items()]
    heapq.heapify(heap)
    done: set[int] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in g._und[u]:
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def network_distance_m(g: RoadGraph, a: PathPosition, b: PathPosition) -> float:
    """Spatial separation along the network, including partial-edge offsets.

    Edge direction is ignored: the roadway between two points has one length
    whichever way traffic flows, so the measure is symmetric by construction.
    """
    cands: list[float] = []
    if a.edge.undirected_key() == b.edge.undirected_key():
        off_a = a.offset_m if a.edge.src <= a.edge.dst else a.edge.length_m - a.offset_m
        off_b = b.offset_m if b.edge.src <= b.edge.dst else b.edge.length_m - b.offset_m
        cands.append(abs(off_a - off_b))
    seeds = {a.edge.src: a.offset_m}
    rem = a.edge.length_m - a.offset_m
    if a.edge.dst not in seeds or rem < seeds[a.edge.dst]:
        seeds[a.edge.dst] = rem
    dist = _undirected_multisource(g, seeds)
    for node, tail in ((b.edge.src, b.offset_m), (b.edge.dst, b.edge.length_m - b.offset_m)):
        if node in dist:
            cands.append(dist[node] + tail)
    if not cands:
        raise NoRouteError("positions are not connected")
    return min(cands)


def route_target_points(route: Route, max_spacing_m: float) -> list[PathPosition]:
    """All route vertices plus fill-in points so spacing <= max_spacing_m.

    Returned in order from the route start; first and last coincide with the
    route endpoints.
    """
    if not route.edges:
        raise ValueError("route is empty")
    if max_spacing_m <= 0:
        raise ValueError("max_spacing_m must be > 0")
    points: list[PathPosition] = []
    for e in route.edges:
        pieces = max(1, math.ceil(e.length_m / max_spacing_m))
        for k in range(pieces):
            points.append(PathPosition(e, e.length_m * k / pieces, route))
    last = route.edges[-1]
    points.append(PathPosition(last, last.length_m, route))
    return points


def project_along(route: Route, start: PathPosition, distance_m: float) -> PathPosition | None:
    """Advance ``distance_m`` along the route from ``start``.

    Returns None once the advance would pass the route end (the vehicle has
    left the segment).
    """
    if distance_m < 0:
        raise ValueError("distance_m must be >= 0")
    cum = route.offset_of(start) + distance_m
    if cum > route.total_length_m + 1e-9:
        return None
    return route.position_at(min(cum, route.total_length_m))


def project_point_to_route(g: RoadGraph, point: GeoPoint, route: Route) -> tuple[float, float]:
    """Nearest approach of ``point`` to the route polyline.

    Returns (crow_distance_m, route_offset_m of the nearest point). Uses a
    local equirectangular projection per edge, accurate at street scale.
    """
    best = (math.inf, 0.0)
    cum = 0.0
    for e in route.edges:
        a = g.nodes[e.src].point
        b = g.nodes[e.dst].point
        scale = math.cos(math.radians((a.lat + b.lat) / 2.0))
        ax, ay = a.lon * scale, a.lat
        bx, by = b.lon * scale, b.lat
        px, py = point.lon * scale, point.lat
        vx, vy = bx - ax, by - ay
        denom = vx * vx + vy * vy
        t = 0.0 if denom == 0 else max(0.0, min(1.0, ((px - ax) * vx + (py - ay) * vy) / denom))
        near = GeoPoint(a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t)
        d = haversine_m(point, near)
        if d < best[0]:
            best = (d, cum + t * e.length_m)
        cum += e.length_m
    return best
