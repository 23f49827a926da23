"""``bridge`` console script."""
from __future__ import annotations

import argparse
import sys

from .conditions import SchemaError
from .generate import BridgeJob, ModelUnavailable, generate


def _parse_weights(text: str | None) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, _, value = item.partition("=")
        if not key or not value:
            raise SchemaError(f"bad --weights entry {item!r}; use key=value")
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridge",
        description="turn exported layout conditions into a video")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="render one conditions file")
    p.add_argument("--conditions", required=True)
    p.add_argument("--out", required=True,
                   help="output video (.mp4, .avi, .gif, or .npz)")
    p.add_argument("--mode", choices=["mock", "real"], default="mock")
    p.add_argument("--frames", type=int, default=16)
    p.add_argument("--resolution", default="512x320")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--guidance", type=float, default=7.5)
    p.add_argument("--weights", default=None,
                   help="real mode: comma-separated key=value entries, "
                        "including composer=package.module:function")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    width, _, height = args.resolution.partition("x")
    job = BridgeJob(
        conditions_path=args.conditions, out_path=args.out, mode=args.mode,
        frames=args.frames, width=int(width), height=int(height),
        seed=args.seed, steps=args.steps, guidance=args.guidance,
        weights=_parse_weights(args.weights))
    try:
        result = generate(job)
    except (SchemaError, ModelUnavailable) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {result['video']} ({result['frames']} frames) and "
          f"{result['metadata']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
