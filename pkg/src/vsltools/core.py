"""Video scene layout types and pure geometric/temporal transforms.

A video scene layout (VSL) is an ordered sequence of keyframe layouts on a
fixed pixel canvas. Each keyframe holds a set of labeled bounding boxes with
persistent numeric object identities, plus a local caption; the sequence
shares one global caption and an optional reasoning statement.

All types are immutable values; every operation returns a new object and is
safe to call concurrently.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .errors import BadFrameCount, EmptyLayout, SchemaError

_CANVAS_EPS = 1e-6


@dataclass(frozen=True)
class Canvas:
    """Pixel canvas, width x height."""

    width: int
    height: int

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def area(self) -> float:
        return float(self.width) * float(self.height)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: top-left corner plus size, in floating pixels.

    ``object_id`` is the persistent identity that tracks one object across
    keyframes; ``label`` is its free-text category phrase.
    """

    object_id: int
    label: str
    x: float
    y: float
    w: float
    h: float

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class KeyframeLayout:
    """One timepoint's boxes plus its local caption."""

    frame_index: int
    boxes: tuple[BoundingBox, ...]
    local_caption: str = ""

    def __post_init__(self):
        if not isinstance(self.boxes, tuple):
            object.__setattr__(self, "boxes", tuple(self.boxes))


@dataclass(frozen=True)
class VideoSceneLayout:
    """Ordered keyframe layouts with a shared global caption."""

    canvas: Canvas
    keyframes: tuple[KeyframeLayout, ...]
    global_caption: str = ""
    reasoning: str | None = None

    def __post_init__(self):
        if not isinstance(self.keyframes, tuple):
            object.__setattr__(self, "keyframes", tuple(self.keyframes))

    @property
    def n_keyframes(self) -> int:
        return len(self.keyframes)


@dataclass(frozen=True)
class DenseLayoutSequence:
    """Per-frame layouts obtained by temporally upsampling a VSL."""

    canvas: Canvas
    frames: tuple[KeyframeLayout, ...]

    def __post_init__(self):
        if not isinstance(self.frames, tuple):
            object.__setattr__(self, "frames", tuple(self.frames))


class CaptionMode(enum.Enum):
    """How per-frame captions are chosen when exporting conditions.

    MIX uses local captions exactly on keyframe-anchored dense frames and
    the global caption elsewhere; GLOBAL and LOCAL use one source throughout.
    """

    MIX = "mix"
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class GenerationCondition:
    """One dense frame's grounding boxes plus its selected caption."""

    frame_index: int
    boxes: tuple[BoundingBox, ...]
    caption: str
    caption_source: str  # "global" or "local"


@dataclass(frozen=True)
class Finding:
    """One validation violation, located by keyframe position and object."""

    rule: str
    keyframe_index: int | None = None
    object_id: int | None = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


def round_half_up(value: float) -> int:
    """Round to the nearest integer, with ties rounded up."""
    return math.floor(value + 0.5)


def validate(vsl: VideoSceneLayout) -> ValidationReport:
    """Check every structural invariant; report violations, never raise."""
    findings: list[Finding] = []
    canvas = vsl.canvas
    if canvas.width <= 0 or canvas.height <= 0:
        findings.append(Finding("bad-canvas", detail=f"{canvas.width}x{canvas.height}"))
    if not vsl.keyframes:
        findings.append(Finding("empty-vsl", detail="a layout needs at least one keyframe"))

    label_by_id: dict[int, str] = {}
    prev_index: int | None = None
    for pos, kf in enumerate(vsl.keyframes):
        if prev_index is not None and kf.frame_index <= prev_index:
            findings.append(Finding("frame-index-order", keyframe_index=pos,
                                    detail=f"{kf.frame_index} after {prev_index}"))
        prev_index = kf.frame_index

        seen: set[int] = set()
        for box in kf.boxes:
            if box.object_id in seen:
                findings.append(Finding("duplicate-object-id", pos, box.object_id))
            seen.add(box.object_id)
            if box.object_id < 0:
                findings.append(Finding("negative-object-id", pos, box.object_id))
            if not box.label:
                findings.append(Finding("empty-label", pos, box.object_id))
            if box.w <= 0 or box.h <= 0:
                findings.append(Finding("non-positive-size", pos, box.object_id,
                                        detail=f"w={box.w}, h={box.h}"))
            elif (box.x < -_CANVAS_EPS or box.y < -_CANVAS_EPS
                  or box.x2 > canvas.width + _CANVAS_EPS
                  or box.y2 > canvas.height + _CANVAS_EPS):
                findings.append(Finding("out-of-canvas", pos, box.object_id,
                                        detail=f"[{box.x}, {box.y}, {box.w}, {box.h}]"))
            known = label_by_id.get(box.object_id)
            if known is None:
                label_by_id[box.object_id] = box.label
            elif known != box.label:
                findings.append(Finding("identity-label-mismatch", pos, box.object_id,
                                        detail=f"{known!r} vs {box.label!r}"))
    return ValidationReport(tuple(findings))


def clamp_to_canvas(vsl: VideoSceneLayout) -> VideoSceneLayout:
    """Intersect every box with the canvas, dropping empty intersections.

    Boxes already inside the canvas are passed through untouched. Raises
    EmptyLayout when nothing survives anywhere in the sequence.
    """
    width, height = float(vsl.canvas.width), float(vsl.canvas.height)
    kept_any = False
    new_keyframes = []
    for kf in vsl.keyframes:
        boxes = []
        for box in kf.boxes:
            if box.w <= 0 or box.h <= 0:
                continue
            if box.x >= 0 and box.y >= 0 and box.x2 <= width and box.y2 <= height:
                boxes.append(box)
                continue
            x1 = max(box.x, 0.0)
            y1 = max(box.y, 0.0)
            x2 = min(box.x2, width)
            y2 = min(box.y2, height)
            if x2 - x1 <= 0 or y2 - y1 <= 0:
                continue
            boxes.append(replace(box, x=x1, y=y1, w=x2 - x1, h=y2 - y1))
        kept_any = kept_any or bool(boxes)
        new_keyframes.append(replace(kf, boxes=tuple(boxes)))
    if not kept_any:
        raise EmptyLayout("every box fell entirely outside the canvas")
    return replace(vsl, keyframes=tuple(new_keyframes))


def rescale(vsl: VideoSceneLayout, target: Canvas) -> VideoSceneLayout:
    """Map all coordinates onto a new canvas by independent x/y scaling."""
    sx = target.width / vsl.canvas.width
    sy = target.height / vsl.canvas.height
    new_keyframes = tuple(
        replace(kf, boxes=tuple(
            replace(b, x=b.x * sx, y=b.y * sy, w=b.w * sx, h=b.h * sy)
            for b in kf.boxes))
        for kf in vsl.keyframes)
    return replace(vsl, canvas=target, keyframes=new_keyframes)


def flip_horizontal(vsl: VideoSceneLayout) -> VideoSceneLayout:
    """Mirror every box across the vertical canvas axis."""
    width = vsl.canvas.width
    new_keyframes = tuple(
        replace(kf, boxes=tuple(
            replace(b, x=(width - b.w) - b.x) for b in kf.boxes))
        for kf in vsl.keyframes)
    return replace(vsl, keyframes=new_keyframes)


def reverse_temporal(vsl: VideoSceneLayout) -> VideoSceneLayout:
    """Reverse keyframe order, mirroring frame indices onto the same span."""
    kfs = vsl.keyframes
    if len(kfs) <= 1:
        return vsl
    lo, hi = kfs[0].frame_index, kfs[-1].frame_index
    new_keyframes = tuple(
        replace(kf, frame_index=lo + hi - kf.frame_index)
        for kf in reversed(kfs))
    return replace(vsl, keyframes=new_keyframes)


def anchor_times(n_keyframes: int, n_frames: int) -> tuple[float, ...]:
    """Dense-time anchors for keyframes spread uniformly over [0, n_frames-1]."""
    if n_keyframes == 1:
        return (0.0,)
    step = (n_frames - 1) / (n_keyframes - 1)
    return tuple(j * step for j in range(n_keyframes))


def _nearest_anchor(anchors: Sequence[float], t: float) -> int:
    best = 0
    best_dist = abs(t - anchors[0])
    for j in range(1, len(anchors)):
        dist = abs(t - anchors[j])
        if dist < best_dist:
            best, best_dist = j, dist
    return best


def interpolate(vsl: VideoSceneLayout, n: int) -> DenseLayoutSequence:
    """Expand a VSL to ``n`` dense frames by per-object linear interpolation.

    Keyframe j sits at dense time j*(n-1)/(N-1). An object only exists on
    segments whose two bounding keyframes both contain it: it appears and
    disappears exactly at those anchors, with no extrapolation beyond them.
    Dense frames that coincide with an anchor reproduce the keyframe's boxes
    exactly; every dense frame carries the local caption of its nearest
    anchor keyframe and is re-indexed 0..n-1.
    """
    n_key = len(vsl.keyframes)
    if n < n_key:
        raise BadFrameCount(f"dense frame count {n} < keyframe count {n_key}")
    if n_key == 1:
        base = vsl.keyframes[0]
        frames = tuple(replace(base, frame_index=t) for t in range(n))
        return DenseLayoutSequence(vsl.canvas, frames)

    anchors = anchor_times(n_key, n)
    eps = 1e-9
    frames = []
    for t in range(n):
        hit = None
        for j, at in enumerate(anchors):
            if abs(t - at) <= eps:
                hit = j
                break
        near = vsl.keyframes[_nearest_anchor(anchors, t)]
        if hit is not None:
            frames.append(KeyframeLayout(t, vsl.keyframes[hit].boxes, near.local_caption))
            continue
        # strictly between two consecutive anchors
        seg = 0
        while anchors[seg + 1] < t:
            seg += 1
        kf_a, kf_b = vsl.keyframes[seg], vsl.keyframes[seg + 1]
        u = (t - anchors[seg]) / (anchors[seg + 1] - anchors[seg])
        by_id = {b.object_id: b for b in kf_b.boxes}
        boxes = []
        for a in kf_a.boxes:
            b = by_id.get(a.object_id)
            if b is None:
                continue
            boxes.append(BoundingBox(
                a.object_id, a.label,
                a.x + (b.x - a.x) * u,
                a.y + (b.y - a.y) * u,
                a.w + (b.w - a.w) * u,
                a.h + (b.h - a.h) * u))
        frames.append(KeyframeLayout(t, tuple(boxes), near.local_caption))
    return DenseLayoutSequence(vsl.canvas, tuple(frames))


def build_conditions(dense: DenseLayoutSequence, vsl: VideoSceneLayout,
                     mode: CaptionMode = CaptionMode.MIX) -> list[GenerationCondition]:
    """Turn dense frames into per-frame generation conditions.

    GLOBAL repeats the global caption; LOCAL uses each frame's nearest-anchor
    local caption; MIX places local captions only on the dense frames whose
    index equals the half-up rounding of a keyframe's anchor time. Empty
    local captions always fall back to the global caption.
    """
    n = len(dense.frames)
    anchors = anchor_times(len(vsl.keyframes), n)
    anchored = {round_half_up(at): j for j, at in enumerate(anchors)}
    conditions = []
    for frame in dense.frames:
        caption, source = vsl.global_caption, "global"
        if mode is CaptionMode.LOCAL:
            if frame.local_caption:
                caption, source = frame.local_caption, "local"
        elif mode is CaptionMode.MIX:
            j = anchored.get(frame.frame_index)
            if j is not None and vsl.keyframes[j].local_caption:
                caption, source = vsl.keyframes[j].local_caption, "local"
        conditions.append(GenerationCondition(frame.frame_index, frame.boxes,
                                              caption, source))
    return conditions


# --- JSON wire format -------------------------------------------------------
#
# Canonical key order, kept stable so serialized layouts are byte-comparable:
#   {"canvas": {"width", "height"}, "global_caption", "reasoning",
#    "keyframes": [{"frame_index", "local_caption",
#                   "boxes": [{"id", "label", "x", "y", "w", "h"}]}]}
# Coordinates are emitted with at most two decimal places.


def _num(value: float) -> int | float:
    rounded = round(float(value), 2)
    as_int = int(rounded)
    return as_int if rounded == as_int else rounded


def box_to_dict(box: BoundingBox) -> dict:
    return {"id": box.object_id, "label": box.label,
            "x": _num(box.x), "y": _num(box.y),
            "w": _num(box.w), "h": _num(box.h)}


def vsl_to_dict(vsl: VideoSceneLayout) -> dict:
    return {
        "canvas": {"width": vsl.canvas.width, "height": vsl.canvas.height},
        "global_caption": vsl.global_caption,
        "reasoning": vsl.reasoning,
        "keyframes": [
            {"frame_index": kf.frame_index,
             "local_caption": kf.local_caption,
             "boxes": [box_to_dict(b) for b in kf.boxes]}
            for kf in vsl.keyframes
        ],
    }


def vsl_to_json(vsl: VideoSceneLayout, indent: int | None = None) -> str:
    return json.dumps(vsl_to_dict(vsl), indent=indent)


def _require(mapping: Mapping, key: str, kind: type | tuple, where: str):
    if not isinstance(mapping, Mapping):
        raise SchemaError(f"{where}: expected an object, got {type(mapping).__name__}")
    if key not in mapping:
        raise SchemaError(f"{where}: missing key {key!r}")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{where}.{key}: expected {kind}, got {type(value).__name__}")
    return value


def box_from_dict(data: Mapping) -> BoundingBox:
    return BoundingBox(
        object_id=int(_require(data, "id", int, "box")),
        label=str(_require(data, "label", str, "box")),
        x=float(_require(data, "x", (int, float), "box")),
        y=float(_require(data, "y", (int, float), "box")),
        w=float(_require(data, "w", (int, float), "box")),
        h=float(_require(data, "h", (int, float), "box")),
    )


def vsl_from_dict(data: Mapping) -> VideoSceneLayout:
    canvas_d = _require(data, "canvas", Mapping, "vsl")
    canvas = Canvas(int(_require(canvas_d, "width", int, "canvas")),
                    int(_require(canvas_d, "height", int, "canvas")))
    reasoning = data.get("reasoning")
    if reasoning is not None and not isinstance(reasoning, str):
        raise SchemaError("vsl.reasoning: expected string or null")
    keyframes = []
    for kf_d in _require(data, "keyframes", list, "vsl"):
        boxes = tuple(box_from_dict(b) for b in _require(kf_d, "boxes", list, "keyframe"))
        keyframes.append(KeyframeLayout(
            frame_index=int(_require(kf_d, "frame_index", int, "keyframe")),
            boxes=boxes,
            local_caption=str(kf_d.get("local_caption", ""))))
    return VideoSceneLayout(
        canvas=canvas,
        keyframes=tuple(keyframes),
        global_caption=str(_require(data, "global_caption", str, "vsl")),
        reasoning=reasoning,
    )


def vsl_from_json(text: str) -> VideoSceneLayout:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SchemaError(f"invalid JSON: {err}") from err
    return vsl_from_dict(data)


def condition_to_dict(cond: GenerationCondition) -> dict:
    return {"frame_index": cond.frame_index,
            "boxes": [box_to_dict(b) for b in cond.boxes],
            "caption": cond.caption,
            "caption_source": cond.caption_source}


def conditions_to_json(conditions: Iterable[GenerationCondition],
                       indent: int | None = None) -> str:
    return json.dumps([condition_to_dict(c) for c in conditions], indent=indent)


def condition_from_dict(data: Mapping) -> GenerationCondition:
    source = str(_require(data, "caption_source", str, "condition"))
    if source not in ("global", "local"):
        raise SchemaError(f"condition.caption_source: {source!r}")
    return GenerationCondition(
        frame_index=int(_require(data, "frame_index", int, "condition")),
        boxes=tuple(box_from_dict(b) for b in _require(data, "boxes", list, "condition")),
        caption=str(_require(data, "caption", str, "condition")),
        caption_source=source,
    )


def conditions_from_json(text: str) -> list[GenerationCondition]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SchemaError(f"invalid JSON: {err}") from err
    if not isinstance(data, list):
        raise SchemaError("conditions: expected a JSON array")
    return [condition_from_dict(d) for d in data]
