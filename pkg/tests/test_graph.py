import math
import random

import pytest

from roadpulse.errors import GraphFormatError, NoRouteError

from roadpulse.graph import (
    PathPosition,
    Route,
    load_graph,
    network_distance_m,
    project_along,
    project_point_to_route,
    route_target_points,
    shortest_path,
)

from conftest import (
    floyd_warshall,
    line_graph,
    line_route,
    make_graph,
    random_connected_graph,
)

# Golden values captured once from the generated corridor fixture.
FIXTURE_NODE_COUNT = 53
FIXTURE_EDGE_COUNT = 102
BRIXTON_LENGTH_M = 3581.73


def minimal_doc():
    return {
        "default_max_speed_kmh": 77.2,
        "nodes": [
            {"id": 1, "lat": 51.0, "lon": -0.1},
            {"id": 2, "lat": 51.0009, "lon": -0.1},
        ],
        "edges": [{"from": 1, "to": 2, "length_m": 100.0}],
    }


class TestLoadGraph:
    def test_minimal_document(self):
        g = load_graph(minimal_doc())
        assert len(g.nodes) == 2
        assert len(g.edges) == 1
        assert g.edges[0].max_speed_kmh == 77.2

    def test_dangling_edge(self):
        doc = minimal_doc()
        doc["edges"][0]["to"] = 99
        with pytest.raises(GraphFormatError, match="dangling"):
            load_graph(doc)

    def test_non_positive_length(self):
        doc = minimal_doc()
        doc["edges"][0]["length_m"] = 0
        with pytest.raises(GraphFormatError, match="non-positive length"):
            load_graph(doc)

    def test_length_sanity_band(self):
        doc = minimal_doc()
        doc["edges"][0]["length_m"] = 500.0  # 5x the ~100 m crow distance
        with pytest.raises(GraphFormatError, match="sanity band"):
            load_graph(doc)

    def test_duplicate_node_id(self):
        doc = minimal_doc()
        doc["nodes"].append({"id": 1, "lat": 51.0, "lon": -0.2})
        with pytest.raises(GraphFormatError, match="duplicate"):
            load_graph(doc)

    def test_invalid_json_text(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(GraphFormatError, match="invalid JSON"):
            load_graph(path)

    def test_missing_key(self):
        with pytest.raises(GraphFormatError, match="missing top-level key"):
            load_graph({"nodes": [], "edges": []})

    def test_fixture_golden_counts(self, fixture_graph):
        assert len(fixture_graph.nodes) == FIXTURE_NODE_COUNT
        assert len(fixture_graph.edges) == FIXTURE_EDGE_COUNT


class TestShortestPath:
    def test_same_node_empty_route(self):
        g = line_graph([100.0])
        route = shortest_path(g, 0, 0)
        assert route.edges == ()
        assert route.total_length_m == 0.0

    def test_triangle_forced_by_weights(self):
        g = make_graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)])
        route = shortest_path(g, 0, 2)
        assert [e.dst for e in route.edges] == [1, 2]
        assert route.total_length_m == 2.0

    def test_unreachable(self):
        g = make_graph(3, [(0, 1, 1.0)])
        with pytest.raises(NoRouteError):
            shortest_path(g, 0, 2)

    def test_unknown_node(self):
        g = line_graph([100.0])
        with pytest.raises(ValueError, match="unknown node"):
            shortest_path(g, 0, 42)

    def test_tie_break_prefers_smaller_node(self):
        # Two equal-length routes 0->1->3 and 0->2->3.
        g = make_graph(4, [(0, 1, 5.0), (0, 2, 5.0), (1, 3, 5.0), (2, 3, 5.0)])
        route = shortest_path(g, 0, 3)
        assert [e.src for e in route.edges] == [0, 1]

    def test_matches_floyd_warshall_on_random_graphs(self):
        rng = random.Random(42)
        for _ in range(40):
            g = random_connected_graph(rng, max_nodes=50)
            oracle = floyd_warshall(g)
            nodes = sorted(g.nodes)
            for src in rng.sample(nodes, min(4, len(nodes))):
                for dst in rng.sample(nodes, min(4, len(nodes))):
                    expect = oracle[src][dst]
                    if expect == math.inf:
                        with pytest.raises(NoRouteError):
                            shortest_path(g, src, dst)
                    else:
                        assert shortest_path(g, src, dst).total_length_m == expect

    def test_brixton_fixture_route_length(self, fixture_graph):
        brixton_nodes = [n for n in fixture_graph.nodes if n < 2000]
        route = shortest_path(fixture_graph, min(brixton_nodes), max(brixton_nodes))
        assert route.total_length_m == pytest.approx(BRIXTON_LENGTH_M, abs=0.01)


class TestNetworkDistance:
    def test_same_position(self):
        g = line_graph([100.0])
        pos = PathPosition(g.edges[0], 40.0)
        assert network_distance_m(g, pos, pos) == 0.0

    def test_same_edge_offsets(self):
        g = line_graph([100.0])
        e = g.edges[0]
        a, b = PathPosition(e, 10.0), PathPosition(e, 60.0)
        assert network_distance_m(g, a, b) == 50.0
        assert network_distance_m(g, b, a) == 50.0

    def test_unreachable(self):
        g = make_graph(4, [(0, 1, 10.0), (2, 3, 10.0)])
        a = PathPosition(g.edges[0], 1.0)
        b = PathPosition(g.edges[1], 1.0)
        with pytest.raises(NoRouteError):
            network_distance_m(g, a, b)

    @staticmethod
    def _enumerate_oracle(g, a, b):
        """Min over all simple undirected node paths between edge endpoints."""
        und = {}
        for e in g.edges:
            k = tuple(sorted((e.src, e.dst)))
            und[k] = min(und.get(k, math.inf), e.length_m)
        adj = {}
        for (u, v), w in und.items():
            adj.setdefault(u, []).append((v, w))
            adj.setdefault(v, []).append((u, w))

        def simple_paths(u, goal, seen, cost):
            if u == goal:
                yield cost
                return
            for v, w in adj.get(u, []):
                if v not in seen:
                    yield from simple_paths(v, goal, seen | {v}, cost + w)

        best = math.inf
        if a.edge.undirected_key() == b.edge.undirected_key():
            off_a = a.offset_m if a.edge.src <= a.edge.dst else a.edge.length_m - a.offset_m
            off_b = b.offset_m if b.edge.src <= b.edge.dst else b.edge.length_m - b.offset_m
            best = abs(off_a - off_b)
        for u, du in ((a.edge.src, a.offset_m), (a.edge.dst, a.edge.length_m - a.offset_m)):
            for v, dv in ((b.edge.src, b.offset_m), (b.edge.dst, b.edge.length_m - b.offset_m)):
                for cost in simple_paths(u, v, {u}, 0.0):
                    best = min(best, du + cost + dv)
        return best

    def test_matches_path_enumeration_oracle(self):
        rng = random.Random(7)
        for _ in range(60):
            g = random_connected_graph(rng, max_nodes=8)
            edges = list(g.edges)
            ea, eb = rng.choice(edges), rng.choice(edges)
            a = PathPosition(ea, rng.uniform(0, ea.length_m))
            b = PathPosition(eb, rng.uniform(0, eb.length_m))
            got = network_distance_m(g, a, b)
            expect = self._enumerate_oracle(g, a, b)
            assert got == pytest.approx(expect, rel=1e-12)
            assert network_distance_m(g, b, a) == pytest.approx(got, rel=1e-12)


class TestTargetPoints:
    def test_single_edge_spacing_50(self):
        g = line_graph([100.0])
        route = line_route(g)
        pts = route_target_points(route, 50.0)
        assert [route.offset_of(p) for p in pts] == [0.0, 50.0, 100.0]

    def test_single_edge_huge_spacing(self):
        g = line_graph([100.0])
        pts = route_target_points(line_route(g), 1000.0)
        assert [p.offset_m for p in pts] == [0.0, 100.0]

    def test_vertices_always_included(self):
        g = line_graph([70.0, 90.0, 40.0])
        route = line_route(g)
        offsets = [route.offset_of(p) for p in pts] if (pts := route_target_points(route, 50.0)) else []
        for vertex_offset in (0.0, 70.0, 160.0, 200.0):
            assert any(abs(o - vertex_offset) < 1e-9 for o in offsets)

    def test_spacing_never_exceeded(self):
        rng = random.Random(11)
        for _ in range(50):
            lengths = [rng.uniform(5.0, 400.0) for _ in range(rng.randint(1, 6))]
            g = line_graph(lengths)
            route = line_route(g)
            spacing = rng.uniform(10.0, 120.0)
            pts = route_target_points(route, spacing)
            offsets = [route.offset_of(p) for p in pts]
            assert offsets[0] == 0.0
            assert offsets[-1] == pytest.approx(route.total_length_m)
            assert all(b - a <= spacing + 1e-9 for a, b in zip(offsets, offsets[1:]))

    def test_count_arithmetic_on_fixture_segment(self, fixture_graph, fixture_registry):
        cams = [c for c in fixture_registry if c.road_name == "Brixton Road"]
        route = shortest_path(fixture_graph, cams[1].nearest_node, cams[2].nearest_node)
        pts = route_target_points(route, 50.0)
        expect = math.ceil(route.total_length_m / 50.0) + 1
        assert abs(len(pts) - expect) <= len(route.edges) + 1


class TestProjectAlong:
    def test_zero_distance(self):
        g = line_graph([100.0, 100.0])
        route = line_route(g)
        start = route.position_at(30.0)
        assert project_along(route, start, 0.0) == start

    def test_worked_example_209m(self):
        # 1-mile route; advancing 209.2 m from the segment start.
        g = line_graph([100.0] * 16 + [9.344])
        route = line_route(g)
        assert route.total_length_m == pytest.approx(1609.344)
        start = route.position_at(0.0)
        end = project_along(route, start, 209.2)
        assert route.offset_of(end) == pytest.approx(209.2)

    def test_past_end_marker(self):
        g = line_graph([100.0])
        route = line_route(g)
        assert project_along(route, route.position_at(50.0), 51.0) is None

    def test_not_on_route(self):
        g = line_graph([100.0, 100.0])
        route = line_route(g, n_edges=1)
        other = g.edges[-1]
        with pytest.raises(ValueError, match="not on route"):
            project_along(route, PathPosition(other, 10.0), 5.0)

    def test_additivity(self):
        rng = random.Random(13)
        g = line_graph([rng.uniform(20, 200) for _ in range(5)])
        route = line_route(g)
        for _ in range(100):
            start = route.position_at(rng.uniform(0, route.total_length_m / 2))
            d1 = rng.uniform(0, route.total_length_m / 4)
            d2 = rng.uniform(0, route.total_length_m / 4)
            two_step = project_along(route, project_along(route, start, d1), d2)
            one_step = project_along(route, start, d1 + d2)
            assert route.offset_of(two_step) == pytest.approx(
                route.offset_of(one_step), abs=1e-6)


def test_project_point_to_route(fixture_graph, fixture_registry):
    cams = [c for c in fixture_registry if c.road_name == "Brixton Road"]
    route = shortest_path(fixture_graph, cams[0].nearest_node, cams[-1].nearest_node)
    for cam in cams:
        dist, offset = project_point_to_route(fixture_graph, cam.point, route)
        assert dist < 100.0
        assert 0.0 <= offset <= route.total_length_m


def test_position_point_interpolates():
    doc = {
        "default_max_speed_kmh": 77.2,
        "nodes": [
            {"id": 1, "lat": 51.0, "lon": -0.1},
            {"id": 2, "lat": 51.0009, "lon": -0.1},
        ],
        "edges": [{"from": 1, "to": 2, "length_m": 100.0}],
    }
    g = load_graph(doc)
    mid = g.position_point(PathPosition(g.edges[0], 50.0))
    assert mid.lat == pytest.approx(51.00045)
    assert mid.lon == pytest.approx(-0.1)
