import random

import pytest

from roadpulse.geo import METERS_PER_MILE, MPH_TO_MPS
from roadpulse.ingest import DetectionFrame
from roadpulse.windowing import (
    CarryoverEntry,
    CarryoverStore,
    carryover_update,
    time_window,
)

from conftest import line_graph, line_route


def frames_at(times_ms, camera_id="CAM"):
    return [DetectionFrame(camera_id, t, i, ()) for i, t in enumerate(times_ms)]


def stream_280_frames_9s():
    return frames_at([round(i * 9000 / 280) for i in range(280)])


class TestTimeWindow:
    def test_9s_280_frames_two_full_windows(self):
        windows = list(time_window(stream_280_frames_9s(), 4.5))
        assert len(windows) == 2
        assert [len(w.frames) for w in windows] == [140, 140]
        assert not windows[0].partial
        assert not windows[1].partial

    def test_empty_stream(self):
        assert list(time_window([], 4.5)) == []

    def test_trailing_partial_window(self):
        # 7 s of frames at 4.5 s windows: one full window plus a flagged
        # partial covering only 2.5 s.
        stream = frames_at([round(i * 1000 / 31) for i in range(7 * 31)])
        windows = list(time_window(stream, 4.5))
        assert len(windows) == 2
        assert not windows[0].partial
        assert windows[1].partial
        covered = windows[1].frames[-1].ts_ms - windows[1].start_ms
        assert covered == pytest.approx(2500, abs=60)

    def test_alignment_to_first_frame(self):
        stream = frames_at([1000, 1400, 5400, 5499])
        windows = list(time_window(stream, 4.5))
        assert windows[0].start_ms == 1000
        assert windows[0].end_ms == 5500
        assert len(windows) == 1

    def test_interior_gap_emits_empty_window(self):
        stream = frames_at([0, 100, 9100, 9200])
        windows = list(time_window(stream, 4.5))
        assert [len(w.frames) for w in windows] == [2, 0, 2]
        assert windows[1].frames == ()

    def test_invalid_length(self):
        with pytest.raises(ValueError):
            list(time_window([], 0))

    def test_partition_property_random_streams(self):
        rng = random.Random(99)
        for _ in range(200):
            t = 0
            times = []
            for _ in range(rng.randint(0, 120)):
                t += rng.randint(1, 400)
                times.append(t)
            stream = frames_at(times)
            length_s = rng.choice([0.5, 1.0, 4.5, 7.25])
            windows = list(time_window(stream, length_s))
            glued = [f for w in windows for f in w.frames]
            assert glued == stream
            length_ms = round(length_s * 1000)
            for w in windows:
                assert w.end_ms - w.start_ms == length_ms
                for f in w.frames:
                    assert w.start_ms <= f.ts_ms < w.end_ms


def one_mile_route():
    g = line_graph([100.0] * 16 + [9.344])
    return line_route(g)


def entry(speed_mps, origin=0.0, heading=1, departure_ms=0, smax=48 * MPH_TO_MPS,
          camera_id="A", vehicle_id=1, direction="outgoing"):
    return CarryoverEntry(
        camera_id=camera_id, vehicle_id=vehicle_id, cls="car",
        direction=direction, speed_mps=speed_mps,
        proj_speed_mps=min(speed_mps, smax), origin_m=origin, heading=heading,
        departure_ms=departure_ms)


class TestCarryover:
    def test_worked_example_40mph(self):
        # 40 mph for refresh 10 s + latency 2 s inside a 1-mile segment:
        # advances 0.1333 mile and stays an active sample.
        route = one_mile_route()
        store = CarryoverStore()
        store.insert(entry(40 * MPH_TO_MPS))
        samples = carryover_update(store, route, now_ms=10_000, processing_latency_s=2.0)
        assert len(samples) == 1
        miles = samples[0].route_offset_m / METERS_PER_MILE
        assert miles == pytest.approx(40 / 3600 * 12, rel=1e-12)
        assert round(miles, 2) == 0.13

    def test_zero_speed_retained_in_place(self):
        route = one_mile_route()
        store = CarryoverStore()
        store.insert(entry(0.0, origin=250.0))
        samples = store.advance(route, 60_000, 2.0)
        assert len(samples) == 1
        assert samples[0].route_offset_m == 250.0
        assert len(store) == 1

    def test_past_end_evicted(self):
        route = one_mile_route()
        store = CarryoverStore()
        smax = 48 * MPH_TO_MPS
        store.insert(entry(smax))
        # At S_max the mile takes ~75 s; 120 s is comfortably past the end.
        samples = store.advance(route, 120_000, 2.0)
        assert samples == []
        assert len(store) == 0

    def test_speed_clamped_to_smax_for_projection(self):
        route = one_mile_route()
        store = CarryoverStore()
        smax = 48 * MPH_TO_MPS
        store.insert(entry(100.0, smax=smax))  # tracker glitch speed
        samples = store.advance(route, 10_000, 2.0)
        assert samples[0].route_offset_m == pytest.approx(smax * 12.0)
        assert samples[0].speed_mps == 100.0  # raw speed preserved for metrics

    def test_offset_monotone_along_heading(self):
        route = one_mile_route()
        for heading, origin in ((1, 0.0), (-1, route.total_length_m)):
            store = CarryoverStore()
            store.insert(entry(5.0, origin=origin, heading=heading))
            last = None
            for now in range(1_000, 60_000, 5_000):
                samples = store.advance(route, now, 2.0)
                if not samples:
                    break
                progressed = heading * (samples[0].route_offset_m - origin)
                if last is not None:
                    assert progressed >= last
                last = progressed

    def test_entries_deposited_now_are_not_carryover(self):
        route = one_mile_route()
        store = CarryoverStore()
        store.insert(entry(10.0, departure_ms=5_000))
        assert store.advance(route, 5_000, 2.0) == []
        assert len(store.advance(route, 6_000, 2.0)) == 1

    def test_reinsert_same_vehicle_replaces(self):
        route = one_mile_route()
        store = CarryoverStore()
        store.insert(entry(10.0, departure_ms=0))
        store.insert(entry(10.0, departure_ms=4_500))
        assert len(store) == 1
        samples = store.advance(route, 9_000, 2.0)
        assert samples[0].route_offset_m == pytest.approx(10.0 * (4.5 + 2.0))

    def test_incoming_projection_runs_backward(self):
        route = one_mile_route()
        store = CarryoverStore()
        L = route.total_length_m
        store.insert(entry(10.0, origin=L, heading=-1, direction="incoming"))
        samples = store.advance(route, 10_000, 2.0)
        assert samples[0].route_offset_m == pytest.approx(L - 120.0)
