"""Shared randomized-layout factories for the test suite."""
from __future__ import annotations

import random

import pytest

from vsltools.core import BoundingBox, Canvas, KeyframeLayout, VideoSceneLayout

LABEL_POOL = [
    "piano", "acoustic guitar", "drum kit", "trumpet", "violin", "cello",
    "red car", "city bus", "motorbike", "freight train", "barking dog",
]

WORD_POOL = [
    "a", "the", "steady", "loud", "distant", "scene", "moves", "plays",
    "from", "left", "right", "toward", "camera", "street", "room",
]


def random_words(rng: random.Random, low: int = 2, high: int = 6) -> str:
    return " ".join(rng.choice(WORD_POOL) for _ in range(rng.randint(low, high)))


def random_box(rng: random.Random, canvas: Canvas, object_id: int, label: str,
               coords: str = "int") -> BoundingBox:
    w = rng.uniform(8, canvas.width / 2)
    h = rng.uniform(8, canvas.height / 2)
    x = rng.uniform(0, canvas.width - w)
    y = rng.uniform(0, canvas.height - h)
    if coords == "int":
        w, h = max(1, int(w)), max(1, int(h))
        x, y = int(x), int(y)
    elif coords == "grid":
        x, y, w, h = (round(v, 2) for v in (x, y, w, h))
    return BoundingBox(object_id, label, x, y, w, h)


def random_vsl(rng: random.Random, *, canvas: Canvas = Canvas(454, 256),
               n_keyframes: int | None = None, max_objects: int = 4,
               coords: str = "int", tracked: bool = True,
               with_captions: bool = True) -> VideoSceneLayout:
    """Random valid layout sequence.

    ``tracked=True`` keeps every object present in every keyframe (the shape
    of tracker-derived ground truth); otherwise objects live on a random
    contiguous range of keyframes, with at least one object spanning all of
    them so no keyframe is empty.
    """
    n = n_keyframes if n_keyframes is not None else rng.randint(1, 5)
    object_ids = rng.sample(range(1, 40), rng.randint(1, max_objects))
    labels = {oid: rng.choice(LABEL_POOL) for oid in object_ids}
    spans = {}
    for index, oid in enumerate(object_ids):
        if tracked or index == 0:
            spans[oid] = (0, n - 1)
        else:
            first = rng.randint(0, n - 1)
            last = rng.randint(first, n - 1)
            spans[oid] = (first, last)
    keyframes = []
    for t in range(n):
        boxes = tuple(
            random_box(rng, canvas, oid, labels[oid], coords)
            for oid in object_ids if spans[oid][0] <= t <= spans[oid][1])
        keyframes.append(KeyframeLayout(
            t, boxes, random_words(rng) if with_captions else ""))
    return VideoSceneLayout(
        canvas=canvas, keyframes=tuple(keyframes),
        global_caption=random_words(rng) if with_captions else "",
        reasoning=random_words(rng) if rng.random() < 0.7 else None)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240601)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].split("[")[0]
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[{status}] {name}", flush=True)
