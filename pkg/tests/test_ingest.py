import json
import time

import pytest

from roadpulse.errors import RegistryFormatError, StreamFormatError
from roadpulse.geo import GeoPoint
from roadpulse.graph import shortest_path
from roadpulse.ingest import (
    CameraMeta,
    find_cameras,
    frame_to_json,
    load_registry,
    read_stream,
    replay,
)


def make_line(ts_ms, frame_index, boxes=(), camera_id="CAM", **extra):
    doc = {"camera_id": camera_id, "ts_ms": ts_ms, "frame_index": frame_index,
           "boxes": list(boxes), **extra}
    return json.dumps(doc)


def box(track_id=1, cls="car", conf=0.9, bbox=(10, 10, 30, 20)):
    return {"track_id": track_id, "class": cls, "conf": conf, "bbox": list(bbox)}


class TestReadStream:
    def test_empty(self):
        assert list(read_stream([])) == []

    def test_280_lines_9_seconds(self):
        lines = [make_line(i * 9000 // 280, i) for i in range(280)]
        frames = list(read_stream(lines))
        assert len(frames) == 280
        assert frames[-1].ts_ms - frames[0].ts_ms == pytest.approx(9000, abs=40)

    def test_unknown_class_rejected(self):
        lines = [make_line(0, 0, [box(cls="train")])]
        with pytest.raises(StreamFormatError, match="unknown class"):
            list(read_stream(lines))

    def test_error_carries_line_number(self):
        lines = [make_line(0, 0), "{bad json", make_line(100, 1)]
        with pytest.raises(StreamFormatError, match="line 2"):
            list(read_stream(lines))

    def test_timestamp_regression(self):
        lines = [make_line(100, 0), make_line(100, 1)]
        with pytest.raises(StreamFormatError, match="timestamp regression"):
            list(read_stream(lines))

    def test_frame_index_regression(self):
        lines = [make_line(100, 5), make_line(200, 5)]
        with pytest.raises(StreamFormatError, match="frame_index regression"):
            list(read_stream(lines))

    def test_confidence_bounds(self):
        lines = [make_line(0, 0, [box(conf=1.5)])]
        with pytest.raises(StreamFormatError, match="confidence"):
            list(read_stream(lines))

    def test_bbox_bounds_with_registry(self, fixture_registry):
        cam = fixture_registry[0]
        lines = [make_line(0, 0, [box(bbox=(340, 10, 30, 20))], camera_id=cam.id)]
        with pytest.raises(StreamFormatError, match="outside"):
            list(read_stream(lines, registry=fixture_registry))

    def test_independent_camera_ordering(self):
        lines = [make_line(100, 0, camera_id="A"), make_line(50, 0, camera_id="B"),
                 make_line(150, 1, camera_id="A")]
        assert len(list(read_stream(lines))) == 3

    def test_pre_ms_passthrough(self):
        lines = [make_line(0, 0, pre_ms=7.25)]
        frame = next(read_stream(lines))
        assert frame.pre_ms == 7.25

    def test_on_error_skips_bad_lines(self):
        lines = [make_line(0, 0), "garbage", make_line(100, 1)]
        errors = []
        frames = list(read_stream(lines, on_error=errors.append))
        assert len(frames) == 2
        assert len(errors) == 1
        assert errors[0].line_no == 2

    def test_round_trip_through_frame_to_json(self):
        lines = [make_line(0, 0, [box()], pre_ms=3.0), make_line(40, 1)]
        frames = list(read_stream(lines))
        again = list(read_stream([frame_to_json(f) for f in frames]))
        assert again == frames


class TestRegistry:
    def test_fixture_loads(self, fixture_registry):
        assert len(fixture_registry) == 22
        assert {c.road_name for c in fixture_registry} == {"Brixton Road", "Kennington Road"}

    def test_rejects_non_array(self):
        with pytest.raises(RegistryFormatError, match="array"):
            load_registry({"id": "X"})

    def test_duplicate_id(self, fixture_registry_raw):
        doc = fixture_registry_raw + [fixture_registry_raw[0]]
        with pytest.raises(RegistryFormatError, match="duplicate"):
            load_registry(doc)

    def test_meta_invariants(self):
        base = dict(point=GeoPoint(51.0, -0.1), road_name="X", image_width_px=352,
                    image_height_px=288, meters_per_pixel=0.1, refresh_seconds=10.0,
                    clip_seconds=9.0, nearest_node=1)
        with pytest.raises(ValueError, match="meters_per_pixel"):
            CameraMeta(id="a", **{**base, "meters_per_pixel": 12.0})
        with pytest.raises(ValueError, match="refresh_seconds"):
            CameraMeta(id="a", **{**base, "clip_seconds": 11.0})
        with pytest.raises(ValueError, match="pair"):
            CameraMeta(id="a", **base, meters_per_pixel_near=0.08)


class TestFindCameras:
    def test_empty_registry(self, fixture_graph):
        route = shortest_path(fixture_graph, 1000, 1005)
        assert find_cameras([], "Brixton Road", route, fixture_graph) == []

    def test_brixton_order(self, fixture_graph, fixture_registry):
        cams = [c for c in fixture_registry if c.road_name == "Brixton Road"]
        route = shortest_path(fixture_graph, cams[0].nearest_node, cams[-1].nearest_node)
        got = find_cameras(fixture_registry, "Brixton Road", route, fixture_graph)
        assert [c.id for c in got] == [f"BRX-C{i}" for i in range(1, 13)]

    def test_off_route_camera_excluded(self, fixture_graph, fixture_registry):
        cams = [c for c in fixture_registry if c.road_name == "Brixton Road"]
        route = shortest_path(fixture_graph, cams[0].nearest_node, cams[-1].nearest_node)
        stray = CameraMeta(
            id="BRX-STRAY",
            point=GeoPoint(cams[0].point.lat + 0.0025, cams[0].point.lon),  # ~280 m away
            road_name="Brixton Road", image_width_px=352, image_height_px=288,
            meters_per_pixel=0.1, refresh_seconds=10.0, clip_seconds=9.0,
            nearest_node=cams[0].nearest_node)
        got = find_cameras(list(fixture_registry) + [stray], "Brixton Road",
                           route, fixture_graph)
        assert "BRX-STRAY" not in [c.id for c in got]


class TestReplay:
    def test_no_pacing_is_passthrough(self):
        lines = [make_line(i * 40, i) for i in range(5)]
        frames = list(read_stream(lines))
        assert list(replay(frames, pacing=False)) == frames

    def test_pacing_requests_exact_deltas(self):
        lines = [make_line(t, i) for i, t in enumerate([0, 40, 90, 200])]
        frames = list(read_stream(lines))
        sleeps = []
        assert list(replay(frames, pacing=True, sleep=sleeps.append)) == frames
        assert sleeps == [0.04, 0.05, 0.11]

    def test_pacing_wall_clock(self):
        lines = [make_line(i * 50, i) for i in range(5)]
        frames = list(read_stream(lines))
        stamps = []
        for _ in replay(frames, pacing=True):
            stamps.append(time.monotonic())
        deltas = [b - a for a, b in zip(stamps, stamps[1:])]
        for d in deltas:
            assert abs(d - 0.050) < 0.020
