import numpy as np
import pytest

from trackfeed.detect import (
    BackgroundDiffDetector,
    class_for_area,
    estimate_background,
)

from conftest import box_iou


def scene(boxes=(), base=105, noise_seed=None):
    frame = np.full((288, 352), base, dtype=np.uint8)
    for x, y, w, h, value in boxes:
        frame[y:y + h, x:x + w] = value
    if noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        frame = np.clip(frame + rng.normal(0, 2, frame.shape), 0, 255).astype(np.uint8)
    return frame


def test_background_median_ignores_transients():
    frames = [scene() for _ in range(30)]
    frames[5] = scene([(100, 100, 40, 30, 30)])
    bg = estimate_background(frames)
    assert abs(int(bg[110, 110]) - 105) <= 1


def test_detects_dark_and_bright_boxes():
    bg = scene()
    detector = BackgroundDiffDetector(bg)
    frame = scene([(80, 60, 36, 24, 40), (220, 180, 50, 32, 205)], noise_seed=1)
    detections = detector.detect(frame)
    assert len(detections) == 2
    got = sorted(detections, key=lambda d: d.x)
    assert box_iou(got[0].bbox, (80, 60, 36, 24)) > 0.8
    assert box_iou(got[1].bbox, (220, 180, 50, 32)) > 0.8
    assert all(d.confidence > 0.8 for d in detections)


def test_blank_frame_detects_nothing():
    detector = BackgroundDiffDetector(scene())
    assert detector.detect(scene(noise_seed=2)) == []


def test_small_noise_blobs_filtered():
    detector = BackgroundDiffDetector(scene())
    frame = scene([(50, 50, 6, 6, 30)], noise_seed=3)  # 36 px^2 < min area
    assert detector.detect(frame) == []


def test_class_bands_monotone():
    assert class_for_area(200) == "bicycle"
    assert class_for_area(400) == "motorcycle"
    assert class_for_area(36 * 24) == "car"
    assert class_for_area(1500) == "truck"
    assert class_for_area(2500) == "bus"


def test_estimate_background_rejects_empty():
    with pytest.raises(ValueError):
        estimate_background([])
