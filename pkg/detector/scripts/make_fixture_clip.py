"""Regenerate the bundled fixture clip, its annotation, and the calibration
background frame.

The clip is a 9 s, 25 fps, 352x288 street-camera stand-in: asphalt-gray
background, two vertical lane lines 33 px apart (so a 3.3 m reference lane
gives 0.1 m/px), deterministic sensor noise, and three constant-speed
rectangles standing in for vehicles. The first vehicle's per-frame boxes are
written to the annotation file as the tracking oracle.

    python scripts/make_fixture_clip.py
"""

from __future__ import annotations

import json
from pathlib import Path

import cv2
import numpy as np

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

WIDTH, HEIGHT = 352, 288
FPS = 25
DURATION_S = 9
FRAMES = FPS * DURATION_S

ASPHALT = 105
LANE_X = (140, 173)  # 33 px apart
LANE_WIDTH = 3

# (first_frame, last_frame, x_center, y0, dy_per_frame, w, h, gray value)
VEHICLES = [
    ("annotated car", 10, 110, 100, 250.0, -2.2, 36, 24, 40),
    ("bright truck", 60, 170, 250, 10.0, 2.0, 50, 32, 205),
    ("second car", 130, 215, 100, 255.0, -2.6, 36, 24, 60),
]


def background() -> np.ndarray:
    frame = np.full((HEIGHT, WIDTH), ASPHALT, dtype=np.uint8)
    for x in LANE_X:
        frame[:, x:x + LANE_WIDTH] = 255
    return frame


def render_frame(index: int) -> tuple[np.ndarray, dict]:
    frame = background().astype(np.int16)
    boxes = {}
    for name, first, last, xc, y0, dy, w, h, value in VEHICLES:
        if not first <= index <= last:
            continue
        y_top = y0 + dy * (index - first)
        x_left = xc - w // 2
        xi, yi = int(round(x_left)), int(round(y_top))
        if yi < 0 or yi + h > HEIGHT:
            continue
        frame[yi:yi + h, xi:xi + w] = value
        boxes[name] = [xi, yi, w, h]
    rng = np.random.default_rng(1000 + index)
    noisy = frame + rng.normal(0.0, 2.0, frame.shape)
    return np.clip(noisy, 0, 255).astype(np.uint8), boxes


def main():
    FIXTURES.mkdir(exist_ok=True)
    clip_path = FIXTURES / "clip.avi"
    writer = cv2.VideoWriter(
        str(clip_path), cv2.VideoWriter_fourcc(*"MJPG"), FPS, (WIDTH, HEIGHT))
    if not writer.isOpened():
        raise SystemExit("OpenCV cannot open an MJPG AVI writer")
    annotated: dict[str, list[int]] = {}
    for index in range(FRAMES):
        frame, boxes = render_frame(index)
        writer.write(cv2.cvtColor(frame, cv2.COLOR_GRAY2BGR))
        if "annotated car" in boxes:
            annotated[str(index)] = boxes["annotated car"]
    writer.release()

    (FIXTURES / "clip_annotation.json").write_text(json.dumps({
        "clip": clip_path.name,
        "fps": FPS,
        "width": WIDTH,
        "height": HEIGHT,
        "annotated_class": "car",
        "lane_gap_px": LANE_X[1] - LANE_X[0],
        "boxes": annotated,
    }, indent=1))

    cv2.imwrite(str(FIXTURES / "background.png"), background())
    print(f"wrote {clip_path} ({FRAMES} frames), "
          f"{len(annotated)} annotated boxes, background.png")


if __name__ == "__main__":
    main()
