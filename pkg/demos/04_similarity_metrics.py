"""
Layout similarity with a soft category indicator
=================================================

Comparing two layouts means matching their boxes and accumulating geometric
agreement. Instead of requiring exactly equal category strings, box pairs
are weighted by the cosine similarity of projected label phrases, so
"red car" and "car" can still match.
"""
import numpy as np

from vsltools import (BoundingBox, Canvas, HashedProjector, TableProjector,
                      score_sequence)
from vsltools.core import KeyframeLayout, VideoSceneLayout
from vsltools.metrics import (docsim_frame_normalized, iou, ltsim_frame,
                              max_iou_frame, solve_assignment)

canvas = Canvas(454, 256)
projector = HashedProjector()

gt = (BoundingBox(1, "piano", 40, 100, 140, 90),
      BoundingBox(2, "violin", 300, 80, 70, 60))
good = (BoundingBox(1, "piano", 50, 105, 135, 88),
        BoundingBox(2, "violin", 290, 85, 75, 58))
bad = (BoundingBox(1, "piano", 300, 20, 60, 40),)

print("iou of the two pianos:", round(iou(gt[0], good[0]), 3))

# The assignment solver is exact: here the weight matrix makes the diagonal
# pairing optimal.
weights = np.array([[0.9, 0.1], [0.2, 0.8]])
print("assignment:", solve_assignment(weights))

for name, fn in [
    ("maxiou", lambda a, b: max_iou_frame(a, b, projector)),
    ("ltsim", lambda a, b: ltsim_frame(a, b, projector)),
    ("docsim", lambda a, b: docsim_frame_normalized(a, b, projector, canvas)),
]:
    print(f"{name:7s} good={fn(gt, good):.3f}  bad={fn(gt, bad):.3f}")

# A file-backed projector gives control over label geometry: orthogonal
# vectors reduce every metric to hard exact-category matching.
table = TableProjector({"piano": [1.0, 0.0], "violin": [0.0, 1.0]})
renamed = (BoundingBox(1, "violin", 40, 100, 140, 90),)
print("hard mismatch:", max_iou_frame((gt[0],), renamed, table))

# Whole sequences: both sides are resampled to a common length and canvas,
# then per-frame scores are averaged (x100 for display).
vsl = VideoSceneLayout(canvas, (KeyframeLayout(0, gt), KeyframeLayout(1, gt)), "g")
pred = VideoSceneLayout(canvas, (KeyframeLayout(0, good), KeyframeLayout(1, good)), "g")
for metric in ("maxiou", "ltsim", "docsim"):
    score = score_sequence(pred, vsl, metric, projector)
    print(f"sequence {metric}: {score.scaled:.2f}")
