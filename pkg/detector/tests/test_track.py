from trackfeed.detect import Detection
from trackfeed.track import IouTracker, iou


def det(x, y, w=30.0, h=20.0, cls="car", conf=0.9):
    return Detection(x, y, w, h, conf, cls)


def test_iou_basic():
    assert iou((0, 0, 10, 10), (0, 0, 10, 10)) == 1.0
    assert iou((0, 0, 10, 10), (20, 20, 10, 10)) == 0.0
    assert iou((0, 0, 10, 10), (5, 0, 10, 10)) == 0.5 / 1.5


def test_stable_id_through_motion():
    tracker = IouTracker()
    ids = set()
    for step in range(20):
        tracked = tracker.update([det(100.0, 50.0 + 3 * step)])
        assert len(tracked) == 1
        ids.add(tracked[0].track_id)
    assert ids == {1}


def test_two_objects_keep_distinct_ids():
    tracker = IouTracker()
    for step in range(15):
        tracked = tracker.update([
            det(50.0, 40.0 + 3 * step),
            det(250.0, 200.0 - 3 * step),
        ])
        by_x = sorted(tracked, key=lambda t: t.bbox[0])
        assert [t.track_id for t in by_x] == [1, 2]


def test_track_expires_after_max_age():
    tracker = IouTracker(max_age=3)
    tracker.update([det(100.0, 100.0)])
    for _ in range(4):
        assert tracker.update([]) == []
    revived = tracker.update([det(100.0, 100.0)])
    assert revived[0].track_id == 2  # old id retired, never reused


def test_track_survives_short_dropout():
    tracker = IouTracker(max_age=3)
    first = tracker.update([det(100.0, 100.0)])[0].track_id
    tracker.update([])
    tracker.update([])
    back = tracker.update([det(100.0, 106.0)])
    assert [t.track_id for t in back] == [first]


def test_velocity_prediction_bridges_fast_motion():
    tracker = IouTracker(iou_min=0.25)
    ids = set()
    for step in range(12):
        tracked = tracker.update([det(100.0, 20.0 + 12.0 * step, w=36, h=24)])
        ids.update(t.track_id for t in tracked)
    assert ids == {1}


def test_new_detection_far_away_gets_new_id():
    tracker = IouTracker()
    tracker.update([det(50.0, 50.0)])
    tracked = tracker.update([det(50.0, 52.0), det(300.0, 200.0)])
    assert sorted(t.track_id for t in tracked) == [1, 2]
