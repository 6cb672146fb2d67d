"""Detection backends turning frames into class-labelled boxes.

The default backend models the static road scene as the per-pixel temporal
median of sampled frames and segments vehicles as connected regions of
difference. It is deterministic, CPU-cheap, and needs no pretrained weights.
A YOLO backend is available when ultralytics and a local weights file are
supplied.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

# Connected regions smaller than this are sensor noise, not vehicles.
MIN_BOX_AREA_PX = 120.0
DIFF_THRESHOLD = 18

# Box-area bands for the classical backend's class guess (pixels^2).
# Perspective makes this coarse; downstream queries filter by class anyway.
AREA_CLASSES = (
    (300.0, "bicycle"),
    (520.0, "motorcycle"),
    (1250.0, "car"),
    (1900.0, "truck"),
    (float("inf"), "bus"),
)


@dataclass(frozen=True)
class Detection:
    x: float
    y: float
    w: float
    h: float
    confidence: float
    cls: str

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def class_for_area(area: float) -> str:
    for bound, cls in AREA_CLASSES:
        if area < bound:
            return cls
    return "bus"


def estimate_background(frames: list[np.ndarray], max_samples: int = 40) -> np.ndarray:
    """Per-pixel temporal median of evenly sampled grayscale frames."""
    if not frames:
        raise ValueError("cannot estimate a background from zero frames")
    step = max(1, len(frames) // max_samples)
    stack = np.stack(frames[::step]).astype(np.uint8)
    return np.median(stack, axis=0).astype(np.uint8)


class BackgroundDiffDetector:
    """Median-background subtraction with morphological cleanup."""

    def __init__(self, background: np.ndarray,
                 diff_threshold: int = DIFF_THRESHOLD,
                 min_area: float = MIN_BOX_AREA_PX):
        self.background = background
        self.diff_threshold = diff_threshold
        self.min_area = min_area
        self._kernel = cv2.getStructuringElement(cv2.MORPH_RECT, (3, 3))

    def detect(self, gray: np.ndarray) -> list[Detection]:
        diff = cv2.absdiff(gray, self.background)
        _, mask = cv2.threshold(diff, self.diff_threshold, 255, cv2.THRESH_BINARY)
        mask = cv2.morphologyEx(mask, cv2.MORPH_OPEN, self._kernel)
        mask = cv2.morphologyEx(mask, cv2.MORPH_CLOSE, self._kernel, iterations=2)
        contours, _ = cv2.findContours(mask, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
        detections = []
        for contour in contours:
            x, y, w, h = cv2.boundingRect(contour)
            area = float(w * h)
            if area < self.min_area:
                continue
            # Confidence: how solidly the box is foreground.
            filled = float(np.count_nonzero(mask[y:y + h, x:x + w])) / area
            detections.append(Detection(
                x=float(x), y=float(y), w=float(w), h=float(h),
                confidence=round(min(1.0, filled), 4),
                cls=class_for_area(area),
            ))
        detections.sort(key=lambda d: (d.y, d.x))
        return detections


class YoloDetector:
    """Pretrained-DNN backend; activates only with ultralytics + local weights."""

    # COCO ids for the five vehicle classes.
    COCO_VEHICLES = {1: "bicycle", 2: "car", 3: "motorcycle", 5: "bus", 7: "truck"}

    def __init__(self, weights_path: str):
        try:
            from ultralytics import YOLO
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise RuntimeError(
                "the yolo backend needs the 'ultralytics' package "
                "(pip install trackfeed[yolo]) and a local weights file") from exc
        self._model = YOLO(weights_path)

    def detect(self, frame_bgr: np.ndarray) -> list[Detection]:  # pragma: no cover
        detections = []
        for result in self._model(frame_bgr, verbose=False):
            for box in result.boxes:
                cls = self.COCO_VEHICLES.get(int(box.cls))
                if cls is None:
                    continue
                x1, y1, x2, y2 = (float(v) for v in box.xyxy[0])
                detections.append(Detection(
                    x=x1, y=y1, w=x2 - x1, h=y2 - y1,
                    confidence=float(box.conf), cls=cls))
        detections.sort(key=lambda d: (d.y, d.x))
        return detections
