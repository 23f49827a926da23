"""Small layout factory shared by the demo scripts."""
import random

from vsltools import BoundingBox, Canvas, KeyframeLayout, VideoSceneLayout

LABELS = ["piano", "drum kit", "red car", "violin", "city bus"]


def make_vsl(rng: random.Random, n_keyframes: int = 5) -> VideoSceneLayout:
    canvas = Canvas(454, 256)
    labels = rng.sample(LABELS, rng.randint(1, 3))
    keyframes = []
    for t in range(n_keyframes):
        boxes = []
        for i, label in enumerate(labels, start=1):
            w = rng.randint(40, 160)
            h = rng.randint(30, 110)
            boxes.append(BoundingBox(
                i, label,
                rng.randint(0, canvas.width - w),
                rng.randint(0, canvas.height - h), w, h))
        keyframes.append(KeyframeLayout(t, tuple(boxes), f"moment {t}"))
    return VideoSceneLayout(canvas, tuple(keyframes),
                            "sounding objects arranged on a canvas")
