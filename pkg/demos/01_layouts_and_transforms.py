"""
Video scene layouts: construction, validation, and transforms
==============================================================

A video scene layout (VSL) is a short sequence of keyframe layouts on a
pixel canvas: labeled bounding boxes with persistent numeric identities,
one local caption per keyframe, and one shared global caption.
"""
import vsltools as vt

# Build a two-keyframe scene: a car driving right while a dog sits still.
canvas = vt.Canvas(454, 256)
vsl = vt.VideoSceneLayout(
    canvas=canvas,
    keyframes=(
        vt.KeyframeLayout(0, (
            vt.BoundingBox(1, "red car", 10, 140, 96, 56),
            vt.BoundingBox(2, "dog", 210, 180, 40, 44),
        ), "the car enters from the left"),
        vt.KeyframeLayout(1, (
            vt.BoundingBox(1, "red car", 300, 140, 96, 56),
            vt.BoundingBox(2, "dog", 210, 180, 40, 44),
        ), "the car exits to the right"),
    ),
    global_caption="a red car drives past a dog on a sunny street",
)

report = vt.validate(vsl)
print("valid:", report.ok)

# Validation reports, it never raises: break an invariant and look again.
broken = vt.VideoSceneLayout(canvas, (
    vt.KeyframeLayout(0, (vt.BoundingBox(1, "red car", 400, 0, 100, 50),)),))
for finding in vt.validate(broken).findings:
    print("finding:", finding.rule, "object", finding.object_id)

# Out-of-canvas boxes from a sloppy planner are repaired by clamping.
repaired = vt.clamp_to_canvas(broken)
print("repaired box:", repaired.keyframes[0].boxes[0])

# Flip and reverse are the two benchmark augmentations; both are exact
# involutions, so applying them twice restores the original layout.
flipped = vt.flip_horizontal(vsl)
print("flipped car x:", flipped.keyframes[0].boxes[0].x)
print("flip twice restores:", vt.flip_horizontal(flipped) == vsl)

reversed_vsl = vt.reverse_temporal(vsl)
print("reversed captions:", [kf.local_caption for kf in reversed_vsl.keyframes])
print("reverse twice restores:", vt.reverse_temporal(reversed_vsl) == vsl)

# Rescale maps a layout onto the video generator's working resolution.
generation = vt.rescale(vsl, vt.Canvas(512, 320))
print("rescaled car:", generation.keyframes[0].boxes[0])
