"""
From keyframes to per-frame generation conditions
==================================================

A planner produces a handful of keyframe layouts; the video generator wants
one layout per output frame. Linear interpolation of box coordinates turns
N keyframes into n dense frames, and caption selection decides which text
condition each frame carries.
"""
from vsltools import (BoundingBox, Canvas, CaptionMode, KeyframeLayout,
                      VideoSceneLayout, build_conditions, interpolate, rescale)
from vsltools.core import anchor_times, conditions_to_json

# Five keyframes of a car crossing the canvas.
car = lambda t: BoundingBox(1, "red car", 10 + 85 * t, 140, 96, 56)
vsl = VideoSceneLayout(
    Canvas(454, 256),
    tuple(KeyframeLayout(t, (car(t),), f"crossing step {t}") for t in range(5)),
    global_caption="a red car crosses the street from left to right",
)

# Keyframe j anchors at dense time j*(n-1)/(N-1): for 5 keyframes over 16
# frames that is 0, 3.75, 7.5, 11.25, 15.
print("anchors:", anchor_times(5, 16))

dense = interpolate(vsl, 16)
print("car x per frame:")
print([round(f.boxes[0].x, 2) for f in dense.frames])

# Caption selection: Mix places each local caption on the dense frame
# nearest its anchor and uses the global caption everywhere else.
for mode in (CaptionMode.GLOBAL, CaptionMode.LOCAL, CaptionMode.MIX):
    conditions = build_conditions(dense, vsl, mode)
    local_frames = [c.frame_index for c in conditions if c.caption_source == "local"]
    print(f"{mode.value:6s} local captions on frames {local_frames}")

# The generator bridge consumes these conditions as JSON, at the video
# resolution; this is the exact handoff format.
at_video_res = rescale(vsl, Canvas(512, 320))
conditions = build_conditions(interpolate(at_video_res, 16), at_video_res,
                              CaptionMode.MIX)
print(conditions_to_json(conditions)[:200], "...")
