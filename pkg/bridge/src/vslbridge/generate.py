"""Video generation driver: mock rasterizer and real-pipeline glue.

Mock mode rasterizes each frame's boxes as labeled rectangles with
seed-derived colors; output bytes are reproducible for a fixed seed, which
makes it suitable for CI and schema contract tests.

Real mode composes pretrained components without any training: a frozen
text-to-image diffusion backbone, motion modules inserted into every up-
and down-sample block of its UNet, and spatial grounding modules deployed
on the middle block and the lowest-resolution up-sample block. Each frame's
boxes drive the grounding modules and its selected caption drives the text
condition. This path needs GPU weights on disk and raises ModelUnavailable
when they (or their inference stack) are absent; no numerical claims are
tested for it.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .conditions import FrameCondition, SchemaError, check_in_bounds, load_conditions


class ModelUnavailable(Exception):
    """Real mode was requested but weights or the inference stack are missing."""


@dataclass(frozen=True)
class BridgeJob:
    """One generation request."""

    conditions_path: str
    out_path: str
    mode: str = "mock"  # "mock" | "real"
    frames: int = 16
    width: int = 512
    height: int = 320
    seed: int = 0
    steps: int = 25
    guidance: float = 7.5
    weights: dict = field(default_factory=dict)


def _color(seed: int, key: str) -> tuple[int, int, int]:
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    # keep channels away from extremes so boxes contrast with background
    return tuple(40 + digest[i] % 176 for i in range(3))


def render_mock_frames(conditions: list[FrameCondition], job: BridgeJob) -> np.ndarray:
    """Deterministic placeholder frames: each box drawn as a filled, labeled
    rectangle, fully inside the frame. Returns (n, height, width, 3) uint8."""
    check_in_bounds(conditions, job.width, job.height)
    background = _color(job.seed, "background")
    font = ImageFont.load_default()
    frames = []
    for condition in conditions:
        image = Image.new("RGB", (job.width, job.height), background)
        draw = ImageDraw.Draw(image)
        for box in condition.boxes:
            x1 = int(round(box.x))
            y1 = int(round(box.y))
            x2 = min(int(round(box.x + box.w)), job.width) - 1
            y2 = min(int(round(box.y + box.h)), job.height) - 1
            fill = _color(job.seed, f"object:{box.object_id}")
            draw.rectangle((x1, y1, x2, y2), fill=fill, outline=(20, 20, 20))
            draw.text((x1 + 3, y1 + 2), f"{box.object_id}:{box.label}",
                      fill=(245, 245, 245), font=font)
        frames.append(np.asarray(image, dtype=np.uint8))
    return np.stack(frames)


def write_video(frames: np.ndarray, path: str | Path, fps: int = 8) -> None:
    """Write frames to mp4/avi (OpenCV), gif (Pillow), or npz (raw)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npz":
        np.savez_compressed(path, frames=frames)
        return
    if suffix == ".gif":
        images = [Image.fromarray(frame) for frame in frames]
        images[0].save(path, save_all=True, append_images=images[1:],
                       duration=int(1000 / fps), loop=0)
        return
    if suffix in (".mp4", ".avi"):
        import cv2

        fourcc = cv2.VideoWriter_fourcc(*("mp4v" if suffix == ".mp4" else "MJPG"))
        height, width = frames.shape[1:3]
        writer = cv2.VideoWriter(str(path), fourcc, fps, (width, height))
        if not writer.isOpened():
            raise SchemaError(f"cannot open video writer for {path}")
        for frame in frames:
            writer.write(frame[:, :, ::-1])  # RGB -> BGR
        writer.release()
        return
    raise SchemaError(f"unsupported output container {suffix!r}")


def frame_metadata(conditions: list[FrameCondition], job: BridgeJob) -> list[dict]:
    return [{
        "frame_index": c.frame_index,
        "caption": c.caption,
        "caption_source": c.caption_source,
        "boxes": [{"id": b.object_id, "label": b.label,
                   "x": b.x, "y": b.y, "w": b.w, "h": b.h,
                   "color": list(_color(job.seed, f"object:{b.object_id}"))}
                  for b in c.boxes],
    } for c in conditions]


def generate(job: BridgeJob) -> dict:
    """Run one job: returns {"video": path, "metadata": path, "frames": n}."""
    conditions = load_conditions(job.conditions_path)
    if len(conditions) != job.frames:
        raise SchemaError(f"job expects {job.frames} frames but the conditions "
                          f"file holds {len(conditions)}")
    if job.mode == "mock":
        frames = render_mock_frames(conditions, job)
    elif job.mode == "real":
        frames = _generate_real(conditions, job)
    else:
        raise SchemaError(f"unknown mode {job.mode!r}")

    out_path = Path(job.out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_video(frames, out_path)
    metadata_path = out_path.with_suffix(out_path.suffix + ".frames.json")
    metadata_path.write_text(
        json.dumps(frame_metadata(conditions, job), indent=2), encoding="utf-8")
    return {"video": str(out_path), "metadata": str(metadata_path),
            "frames": int(frames.shape[0])}


def _generate_real(conditions: list[FrameCondition], job: BridgeJob) -> np.ndarray:
    """Layout-grounded sampling over pretrained components.

    The diffusion stack is site-specific (checkpoint formats differ), so
    real mode delegates to a composer callable configured in
    ``job.weights``:

    * ``composer``: ``"package.module:function"``, called as
      ``function(conditions, job)`` and returning (n, height, width, 3)
      uint8 frames.
    * any further entries (e.g. ``base``, ``motion``, ``grounding`` weight
      paths) are passed through on the job for the composer to use.

    The expected composition, which the mock does not attempt: a frozen
    text-to-image backbone, temporal transformer (motion) modules inserted
    into every up- and down-sample UNet block, spatial grounding modules on
    the middle block and the lowest-resolution up-sample block; per frame,
    the boxes feed the grounding modules and the selected caption feeds the
    text condition, with ``job.steps`` sampler steps and ``job.guidance``
    classifier-free guidance.
    """
    spec = job.weights.get("composer")
    if not spec:
        raise ModelUnavailable(
            "real mode needs a composer (pretrained diffusion glue); pass "
            "--weights composer=package.module:function,... or use --mode mock")
    module_name, _, attr = str(spec).partition(":")
    try:
        import importlib

        composer = getattr(importlib.import_module(module_name), attr)
    except (ImportError, AttributeError) as err:
        raise ModelUnavailable(f"cannot load composer {spec!r}: {err}") from err
    frames = np.asarray(composer(conditions, job), dtype=np.uint8)
    if frames.shape != (len(conditions), job.height, job.width, 3):
        raise SchemaError(f"composer returned shape {frames.shape}, expected "
                          f"{(len(conditions), job.height, job.width, 3)}")
    return frames
