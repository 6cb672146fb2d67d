"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass

VEHICLE_CLASSES = frozenset({"bus", "car", "truck", "bicycle", "motorcycle"})

DEFAULT_CONFIDENCE_FLOOR = 0.4


@dataclass(frozen=True)
class AdapterConfig:
    """Settings for one extraction run.

    ``detector`` selects the backend: "bgdiff" (median-background
    subtraction, two passes over a seekable file; the default) or "yolo"
    (requires the ultralytics package plus a local weights file passed as
    ``model``). ``tracker`` currently offers the IoU/Hungarian tracker.
    ``frame_stride`` subsamples frames for slow hardware; emitted timestamps
    always reflect the true video timeline.
    """

    camera_id: str
    out_path: str
    detector: str = "bgdiff"
    tracker: str = "iou"
    model: str | None = None
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR
    class_whitelist: frozenset[str] = VEHICLE_CLASSES
    frame_stride: int = 1

    def __post_init__(self):
        if not 0.0 < self.confidence_floor < 1.0:
            raise ValueError("confidence_floor must be in (0, 1)")
        unknown = set(self.class_whitelist) - VEHICLE_CLASSES
        if unknown:
            raise ValueError(f"class_whitelist outside the 5-class set: {sorted(unknown)}")
        if self.frame_stride < 1:
            raise ValueError("frame_stride must be >= 1")
        if self.detector not in ("bgdiff", "yolo"):
            raise ValueError(f"unknown detector backend {self.detector!r}")
        if self.tracker != "iou":
            raise ValueError(f"unknown tracker {self.tracker!r}")
