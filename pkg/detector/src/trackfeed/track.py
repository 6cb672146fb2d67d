"""Multi-object tracking: constant-velocity prediction + IoU assignment.

Detections are matched to live tracks with the Hungarian algorithm over an
IoU cost matrix; unmatched detections open new tracks and unmatched tracks
survive ``max_age`` frames before retiring. Ids are stable for the lifetime
of a track and never reused within a run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from trackfeed.detect import Detection

IOU_MIN = 0.25
MAX_AGE_FRAMES = 8


def iou(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    x1, y1 = max(ax, bx), max(ay, by)
    x2, y2 = min(ax + aw, bx + bw), min(ay + ah, by + bh)
    inter = max(0.0, x2 - x1) * max(0.0, y2 - y1)
    if inter == 0.0:
        return 0.0
    return inter / (aw * ah + bw * bh - inter)


@dataclass
class _Track:
    track_id: int
    box: tuple[float, float, float, float]
    velocity: tuple[float, float]
    cls: str
    confidence: float
    age: int = 0
    hits: int = 1

    def predicted(self) -> tuple[float, float, float, float]:
        x, y, w, h = self.box
        return (x + self.velocity[0], y + self.velocity[1], w, h)


@dataclass(frozen=True)
class TrackedDetection:
    track_id: int
    cls: str
    confidence: float
    bbox: tuple[float, float, float, float]


class IouTracker:
    def __init__(self, iou_min: float = IOU_MIN, max_age: int = MAX_AGE_FRAMES):
        self.iou_min = iou_min
        self.max_age = max_age
        self._tracks: list[_Track] = []
        self._next_id = 1

    def update(self, detections: list[Detection]) -> list[TrackedDetection]:
        """Advance one frame; returns the detections with assigned ids."""
        matches, unmatched_dets, unmatched_tracks = self._assign(detections)

        for t_idx, d_idx in matches:
            track, det = self._tracks[t_idx], detections[d_idx]
            px, py = track.box[0], track.box[1]
            track.velocity = (det.x - px, det.y - py)
            track.box = det.bbox
            track.cls = det.cls
            track.confidence = det.confidence
            track.age = 0
            track.hits += 1

        for t_idx in unmatched_tracks:
            self._tracks[t_idx].age += 1
        self._tracks = [t for t in self._tracks if t.age <= self.max_age]

        for d_idx in unmatched_dets:
            det = detections[d_idx]
            self._tracks.append(_Track(
                track_id=self._next_id, box=det.bbox, velocity=(0.0, 0.0),
                cls=det.cls, confidence=det.confidence))
            self._next_id += 1

        out = [
            TrackedDetection(t.track_id, t.cls, t.confidence, t.box)
            for t in self._tracks if t.age == 0
        ]
        out.sort(key=lambda d: d.track_id)
        return out

    def _assign(self, detections):
        if not self._tracks or not detections:
            return [], list(range(len(detections))), list(range(len(self._tracks)))
        cost = np.zeros((len(self._tracks), len(detections)))
        for i, track in enumerate(self._tracks):
            predicted = track.predicted()
            for j, det in enumerate(detections):
                cost[i, j] = -iou(predicted, det.bbox)
        rows, cols = linear_sum_assignment(cost)
        matches = []
        matched_t, matched_d = set(), set()
        for i, j in zip(rows, cols):
            if -cost[i, j] >= self.iou_min:
                matches.append((i, j))
                matched_t.add(i)
                matched_d.add(j)
        unmatched_dets = [j for j in range(len(detections)) if j not in matched_d]
        unmatched_tracks = [i for i in range(len(self._tracks)) if i not in matched_t]
        return matches, unmatched_dets, unmatched_tracks
