import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def clip_path():
    path = FIXTURES / "clip.avi"
    assert path.exists(), "fixture clip missing; run scripts/make_fixture_clip.py"
    return path


@pytest.fixture(scope="session")
def annotation():
    return json.loads((FIXTURES / "clip_annotation.json").read_text())


@pytest.fixture(scope="session")
def background_path():
    return FIXTURES / "background.png"


def box_iou(a, b):
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    x1, y1 = max(ax, bx), max(ay, by)
    x2, y2 = min(ax + aw, bx + bw), min(ay + ah, by + bh)
    inter = max(0.0, x2 - x1) * max(0.0, y2 - y1)
    if inter == 0.0:
        return 0.0
    return inter / (aw * ah + bw * bh - inter)
