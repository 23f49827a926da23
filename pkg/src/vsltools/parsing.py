"""Parsing and rendering of the text template used for layout planning.

The template is line oriented::

    Reasoning: <one reasoning statement>

    Video Scene Layout:
    Global Caption: <caption>
    Keyframe 0: <local caption>
    1: piano [10, 20, 100, 50]
    2: guitar [200, 30, 80, 40]
    Keyframe 1: <local caption>
    ...

Box lines read ``id: label [x, y, w, h]`` with pixel coordinates. The parser
tolerates surrounding prose, markdown emphasis, and code fences; the section
markers are configurable so alternative templates need no code changes.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .core import BoundingBox, Canvas, KeyframeLayout, VideoSceneLayout
from .errors import DuplicateIdInFrame, MalformedBox, MissingLayoutBlock

_FENCE_RE = re.compile(r"^\s*```")
_DECOR_RE = re.compile(r"^[\s>*#\-]+")
_BOX_RE = re.compile(r"^\s*(\d+)\s*:\s*(.*?)\s*\[(.*?)\]\s*$")
_NUMBER_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)$")


@dataclass(frozen=True)
class TemplateConfig:
    """Expected shape of a planned layout plus the template's markers."""

    expected_keyframes: int = 5
    canvas: Canvas = Canvas(454, 256)
    reasoning_marker: str = "Reasoning:"
    layout_marker: str = "Video Scene Layout:"
    global_caption_marker: str = "Global Caption:"
    keyframe_marker: str = "Keyframe"


@dataclass(frozen=True)
class ParseIssue:
    """A recoverable oddity noticed while parsing (not a failure)."""

    kind: str
    message: str
    expected: int | None = None
    found: int | None = None


@dataclass(frozen=True)
class ParsedResponse:
    """Reasoning statement and layout extracted from a raw model response."""

    reasoning: str
    vsl: VideoSceneLayout
    raw: str
    warnings: tuple[ParseIssue, ...] = field(default=())


def _round_to_int(value: float) -> int:
    return math.floor(value + 0.5)


def serialize(vsl: VideoSceneLayout, cfg: TemplateConfig = TemplateConfig(),
              *, reasoning: str | None = None) -> str:
    """Render a layout back to the canonical template text.

    Coordinates are rounded half-up to integers; the reasoning block is
    omitted when there is no reasoning. ``reasoning`` overrides the layout's
    own statement when given. Output is deterministic byte for byte.
    """
    statement = vsl.reasoning if reasoning is None else reasoning
    lines: list[str] = []
    if statement:
        lines.append(f"{cfg.reasoning_marker} {_one_line(statement)}")
        lines.append("")
    lines.append(cfg.layout_marker)
    lines.append(f"{cfg.global_caption_marker} {_one_line(vsl.global_caption)}".rstrip())
    for kf in vsl.keyframes:
        lines.append(f"{cfg.keyframe_marker} {kf.frame_index}: {_one_line(kf.local_caption)}".rstrip())
        for b in kf.boxes:
            coords = ", ".join(str(_round_to_int(v)) for v in (b.x, b.y, b.w, b.h))
            lines.append(f"{b.object_id}: {_one_line(b.label)} [{coords}]")
    return "\n".join(lines) + "\n"


def _one_line(text: str) -> str:
    return " ".join(text.split()) if text else ""


def _after_marker(line: str, marker: str) -> str | None:
    """Text following ``marker`` when the line starts with it (modulo
    markdown decoration), else None."""
    stripped = _DECOR_RE.sub("", line)
    if stripped.startswith(marker):
        return stripped[len(marker):].strip().lstrip("*").strip()
    return None


def parse_response(text: str, cfg: TemplateConfig = TemplateConfig()) -> ParsedResponse:
    """Extract the reasoning statement and layout from free-form response text.

    Tolerates prose before/after the template, code fences, and markdown
    decoration around markers. Raises MissingLayoutBlock, MalformedBox, or
    DuplicateIdInFrame; a keyframe count differing from the configured
    expectation is reported as a warning on the returned ParsedResponse.
    """
    lines = [ln for ln in text.splitlines() if not _FENCE_RE.match(ln)]
    keyframe_re = re.compile(
        r"^" + re.escape(cfg.keyframe_marker) + r"\s+(\d+)\s*:\s*(.*)$")

    reasoning_parts: list[str] = []
    in_reasoning = False
    saw_layout_marker = False
    global_caption = ""
    keyframes: list[tuple[int, str, list[BoundingBox]]] = []
    current: tuple[int, str, list[BoundingBox]] | None = None
    warnings: list[ParseIssue] = []

    for raw_line in lines:
        line = raw_line.rstrip()
        stripped = _DECOR_RE.sub("", line)

        after_layout = _after_marker(line, cfg.layout_marker)
        if after_layout is not None:
            saw_layout_marker = True
            in_reasoning = False
            continue

        after_global = _after_marker(line, cfg.global_caption_marker)
        if after_global is not None:
            global_caption = after_global
            in_reasoning = False
            continue

        kf_match = keyframe_re.match(stripped)
        if kf_match:
            in_reasoning = False
            current = (int(kf_match.group(1)), kf_match.group(2).strip(), [])
            keyframes.append(current)
            continue

        after_reasoning = _after_marker(line, cfg.reasoning_marker)
        if after_reasoning is not None:
            in_reasoning = True
            if after_reasoning:
                reasoning_parts.append(after_reasoning)
            continue

        box_match = _BOX_RE.match(stripped)
        if box_match and current is not None:
            current[2].append(_decode_box(box_match))
            continue

        if in_reasoning:
            if stripped.strip():
                reasoning_parts.append(stripped.strip())
            else:
                in_reasoning = False

    if not keyframes:
        raise MissingLayoutBlock(
            "no keyframe lines found"
            + ("" if saw_layout_marker else f" and no {cfg.layout_marker!r} marker"))

    for index, _, boxes in keyframes:
        seen: set[int] = set()
        for b in boxes:
            if b.object_id in seen:
                raise DuplicateIdInFrame(
                    f"object id {b.object_id} occurs twice in keyframe {index}")
            seen.add(b.object_id)

    if len(keyframes) != cfg.expected_keyframes:
        warnings.append(ParseIssue(
            kind="keyframe-count-mismatch",
            message=(f"expected {cfg.expected_keyframes} keyframes, "
                     f"found {len(keyframes)}"),
            expected=cfg.expected_keyframes, found=len(keyframes)))

    indices = [idx for idx, _, _ in keyframes]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        warnings.append(ParseIssue(
            kind="keyframe-order-normalized",
            message=f"frame indices {indices} not strictly increasing; renumbered"))
        indices = list(range(len(keyframes)))

    reasoning = " ".join(reasoning_parts)
    vsl = VideoSceneLayout(
        canvas=cfg.canvas,
        keyframes=tuple(
            KeyframeLayout(idx, tuple(boxes), caption)
            for idx, (_, caption, boxes) in zip(indices, keyframes)),
        global_caption=global_caption,
        reasoning=reasoning or None,
    )
    return ParsedResponse(reasoning=reasoning, vsl=vsl, raw=text,
                          warnings=tuple(warnings))


def _decode_box(match: re.Match) -> BoundingBox:
    object_id = int(match.group(1))
    label = match.group(2).strip()
    tokens = [tok.strip() for tok in match.group(3).split(",")]
    if len(tokens) != 4 or not all(_NUMBER_RE.match(t) for t in tokens):
        raise MalformedBox(f"cannot read coordinates from {match.group(0).strip()!r}")
    x, y, w, h = (float(t) for t in tokens)
    if not all(math.isfinite(v) for v in (x, y, w, h)):
        raise MalformedBox(f"non-finite coordinates in {match.group(0).strip()!r}")
    if w <= 0 or h <= 0:
        raise MalformedBox(f"non-positive size w={w}, h={h} for object {object_id}")
    return BoundingBox(object_id, label, x, y, w, h)
