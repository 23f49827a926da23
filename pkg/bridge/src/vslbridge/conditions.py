"""Decoder for the generation-conditions JSON handed over by the planner
toolkit.

The file is a JSON array, one entry per output frame::

    [{"frame_index": 0,
      "boxes": [{"id": 1, "label": "red car", "x": 0, "y": 175,
                 "w": 108.26, "h": 70}],
      "caption": "the car enters from the left edge",
      "caption_source": "local"}, ...]

This module is the only coupling to the producing toolkit: the schema is
the contract, there is no code dependency.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class SchemaError(Exception):
    """The conditions file does not match the expected schema."""


@dataclass(frozen=True)
class Box:
    object_id: int
    label: str
    x: float
    y: float
    w: float
    h: float


@dataclass(frozen=True)
class FrameCondition:
    frame_index: int
    boxes: tuple[Box, ...]
    caption: str
    caption_source: str


def _box(data, where: str) -> Box:
    for key in ("id", "label", "x", "y", "w", "h"):
        if key not in data:
            raise SchemaError(f"{where}: box missing key {key!r}")
    if not isinstance(data["id"], int) or not isinstance(data["label"], str):
        raise SchemaError(f"{where}: bad box id/label types")
    coords = []
    for key in ("x", "y", "w", "h"):
        value = data[key]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(f"{where}: box {key!r} is not a number")
        coords.append(float(value))
    if coords[2] <= 0 or coords[3] <= 0:
        raise SchemaError(f"{where}: box has non-positive size")
    return Box(data["id"], data["label"], *coords)


def load_conditions(path: str | Path) -> list[FrameCondition]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: invalid JSON ({err})") from err
    if not isinstance(data, list) or not data:
        raise SchemaError(f"{path}: expected a non-empty JSON array")
    frames = []
    for i, entry in enumerate(data):
        where = f"{path}[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: expected an object")
        for key in ("frame_index", "boxes", "caption", "caption_source"):
            if key not in entry:
                raise SchemaError(f"{where}: missing key {key!r}")
        if entry["caption_source"] not in ("global", "local"):
            raise SchemaError(f"{where}: bad caption_source "
                              f"{entry['caption_source']!r}")
        if not isinstance(entry["boxes"], list):
            raise SchemaError(f"{where}: boxes must be an array")
        frames.append(FrameCondition(
            frame_index=int(entry["frame_index"]),
            boxes=tuple(_box(b, where) for b in entry["boxes"]),
            caption=str(entry["caption"]),
            caption_source=str(entry["caption_source"])))
    indices = [f.frame_index for f in frames]
    if indices != list(range(len(frames))):
        raise SchemaError(f"{path}: frame_index values must be 0..{len(frames) - 1}, "
                          f"got {indices[:8]}...")
    return frames


def check_in_bounds(frames: list[FrameCondition], width: int, height: int,
                    eps: float = 1e-6) -> None:
    """Every box must lie inside the output resolution."""
    for frame in frames:
        for box in frame.boxes:
            if (box.x < -eps or box.y < -eps
                    or box.x + box.w > width + eps
                    or box.y + box.h > height + eps):
                raise SchemaError(
                    f"frame {frame.frame_index}: box {box.object_id} "
                    f"[{box.x}, {box.y}, {box.w}, {box.h}] exceeds "
                    f"{width}x{height}")
