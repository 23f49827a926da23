"""Command-line entry points (``vsl`` console script)."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from . import retrieval
from .core import (Canvas, CaptionMode, build_conditions, clamp_to_canvas,
                   conditions_to_json, interpolate, rescale, vsl_from_json,
                   vsl_to_json)
from .errors import VslError
from .metrics import METRICS, score_sequence
from .parsing import TemplateConfig, parse_response, serialize
from .planner import (OpenAICompatProvider, PlanConfig,
                      load_provider_profiles, plan)
from .projectors import load_projector


def _parse_canvas(text: str) -> Canvas:
    width, _, height = text.partition("x")
    return Canvas(int(width), int(height))


def _load_template(path: str | None) -> TemplateConfig:
    if path is None:
        return TemplateConfig()
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    kwargs = {}
    if "expected_keyframes" in data:
        kwargs["expected_keyframes"] = int(data["expected_keyframes"])
    if "canvas" in data:
        kwargs["canvas"] = Canvas(int(data["canvas"]["width"]),
                                  int(data["canvas"]["height"]))
    for key in ("reasoning_marker", "layout_marker", "global_caption_marker",
                "keyframe_marker"):
        if key in data:
            kwargs[key] = str(data[key])
    return TemplateConfig(**kwargs)


def _metric_list(text: str) -> list[str]:
    return list(METRICS) if text == "all" else [text]


def cmd_parse(args) -> int:
    cfg = _load_template(args.template)
    text = Path(args.infile).read_text(encoding="utf-8") if args.infile else sys.stdin.read()
    parsed = parse_response(text, cfg)
    for issue in parsed.warnings:
        print(f"warning: {issue.message}", file=sys.stderr)
    out = vsl_to_json(clamp_to_canvas(parsed.vsl) if args.clamp else parsed.vsl,
                      indent=2)
    if args.out:
        Path(args.out).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)
    return 0


def cmd_render(args) -> int:
    cfg = _load_template(args.template)
    vsl = vsl_from_json(Path(args.vsl).read_text(encoding="utf-8"))
    sys.stdout.write(serialize(vsl, cfg))
    return 0


def cmd_score(args) -> int:
    projector = load_projector(args.projector)
    pred = vsl_from_json(Path(args.pred).read_text(encoding="utf-8"))
    gt = vsl_from_json(Path(args.gt).read_text(encoding="utf-8"))
    results = {}
    for metric in _metric_list(args.metric):
        score = score_sequence(pred, gt, metric, projector)
        results[metric] = {"mean": score.mean, "scaled": score.scaled,
                           "frames": list(score.frame_scores),
                           "empty_frames": score.empty_frames}
    if args.json:
        print(json.dumps(results, indent=2))
    else:
        for metric, entry in results.items():
            print(f"{metric:8s} {entry['scaled']:8.2f}")
    return 0


def cmd_retrieve(args) -> int:
    db = retrieval.load(args.db)
    query = json.loads(Path(args.query).read_text(encoding="utf-8"))
    picked = retrieval.knn(db, query, args.k, strategy=args.strategy, seed=args.seed)
    for entry in picked:
        sim = retrieval.cosine_similarity(query, entry.embedding)
        print(f"{entry.id}\t{sim:.6f}\t{entry.audio_ref}")
    return 0


def cmd_plan(args) -> int:
    db = retrieval.load(args.db)
    embedding = None
    if args.embedding:
        embedding = bench_mod.load_embedding(args.embedding)
    profiles = load_provider_profiles(args.config)
    name = args.provider or next(iter(profiles))
    if name not in profiles:
        raise VslError(f"no provider profile named {name!r} in {args.config}")
    provider = OpenAICompatProvider(profiles[name])
    cfg = PlanConfig(k=args.k, temperature=args.temperature,
                     expected_keyframes=args.keyframes,
                     canvas=_parse_canvas(args.canvas),
                     max_retries=args.max_retries, strategy=args.strategy,
                     model=profiles[name].model, seed=args.seed)
    result = plan(args.audio, embedding, db, cfg, provider)
    out = vsl_to_json(result.parsed.vsl, indent=2)
    if args.out:
        Path(args.out).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)
    print(f"attempts: {result.attempts}; examples: {', '.join(result.example_ids)}",
          file=sys.stderr)
    return 0


def cmd_conditions(args) -> int:
    vsl = vsl_from_json(Path(args.vsl).read_text(encoding="utf-8"))
    if args.canvas:
        vsl = rescale(vsl, _parse_canvas(args.canvas))
    dense = interpolate(vsl, args.frames)
    conditions = build_conditions(dense, vsl, CaptionMode(args.mode))
    out = conditions_to_json(conditions, indent=2)
    if args.out:
        Path(args.out).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)
    return 0


def cmd_bench_stats(args) -> int:
    manifest = bench_mod.load_manifest(args.manifest)
    print(bench_mod.stats(manifest).render())
    return 0


def cmd_bench_augment(args) -> int:
    manifest = bench_mod.load_manifest(args.manifest)
    rules = json.loads(Path(args.rules).read_text(encoding="utf-8")) if args.rules else None
    augmented = bench_mod.augment_manifest(manifest, rules)
    bench_mod.save_manifest(augmented, args.out)
    print(f"{len(manifest)} records -> {len(augmented)} records")
    return 0


def cmd_bench_evaluate(args) -> int:
    manifest = bench_mod.load_manifest(args.manifest)
    projector = load_projector(args.projector)
    plans_dir = Path(args.plans)
    plans = {}
    for record in manifest.records:
        artifact = plans_dir / f"{bench_mod._safe_filename(record.id)}.json"
        if artifact.exists():
            plans[record.id] = vsl_from_json(artifact.read_text(encoding="utf-8"))
    report = bench_mod.evaluate(manifest, plans, projector,
                                metrics=_metric_list(args.metrics))
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    print(report.render())
    return 0


def cmd_bench_run(args) -> int:
    manifest = bench_mod.load_manifest(args.manifest)
    db = retrieval.load(args.db)
    projector = load_projector(args.projector)
    profiles = load_provider_profiles(args.config)
    name = args.provider or next(iter(profiles))
    if name not in profiles:
        raise VslError(f"no provider profile named {name!r} in {args.config}")
    provider = OpenAICompatProvider(profiles[name])
    cfg = PlanConfig(k=args.k, temperature=args.temperature,
                     expected_keyframes=args.keyframes,
                     canvas=_parse_canvas(args.canvas),
                     max_retries=args.max_retries, strategy=args.strategy,
                     model=profiles[name].model, seed=args.seed)
    report = bench_mod.run_benchmark(
        manifest, db, cfg, provider, projector, args.run_dir,
        metrics=_metric_list(args.metrics), caption_mode=args.caption_mode,
        db_fraction=args.db_fraction)
    print(report.render())
    return 0


def _add_plan_options(parser) -> None:
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--strategy", choices=retrieval.STRATEGIES, default="knn")
    parser.add_argument("--temperature", type=float, default=0.5)
    parser.add_argument("--keyframes", type=int, default=5)
    parser.add_argument("--canvas", default="454x256")
    parser.add_argument("--max-retries", dest="max_retries", type=int, default=2)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--provider", default=None,
                        help="profile name from the config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vsl",
                                     description="video scene layout toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="extract a layout from response text")
    p.add_argument("--template", default=None, help="template config JSON")
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--no-clamp", dest="clamp", action="store_false")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("render", help="render a layout JSON to template text")
    p.add_argument("vsl")
    p.add_argument("--template", default=None)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("score", help="score a predicted layout against a reference")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--metric", choices=[*METRICS, "all"], default="all")
    p.add_argument("--projector", required=True,
                   help="labels.json, 'hashed[:dim]', or 'onehot'")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("retrieve", help="nearest-neighbor example selection")
    p.add_argument("--db", required=True)
    p.add_argument("--query", required=True, help="embedding JSON array file")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--strategy", choices=retrieval.STRATEGIES, default="knn")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("plan", help="plan a layout for one audio recording")
    p.add_argument("--db", required=True)
    p.add_argument("--audio", required=True)
    p.add_argument("--embedding", default=None, help="query embedding JSON file")
    p.add_argument("--config", required=True, help="provider profiles JSON")
    p.add_argument("--out", default=None)
    _add_plan_options(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("conditions",
                       help="export per-frame generation conditions")
    p.add_argument("vsl")
    p.add_argument("--frames", type=int, default=16)
    p.add_argument("--mode", choices=[m.value for m in CaptionMode], default="mix")
    p.add_argument("--canvas", default=None, help="rescale target, e.g. 512x320")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_conditions)

    p = sub.add_parser("bench", help="benchmark harness")
    bench_sub = p.add_subparsers(dest="bench_command", required=True)

    b = bench_sub.add_parser("stats", help="manifest breakdown tables")
    b.add_argument("--manifest", required=True)
    b.set_defaults(func=cmd_bench_stats)

    b = bench_sub.add_parser("augment", help="add flip/reverse records")
    b.add_argument("--manifest", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--rules", default=None,
                   help="JSON of domain -> [ops]; defaults to the domain policy")
    b.set_defaults(func=cmd_bench_augment)

    b = bench_sub.add_parser("evaluate", help="score plan artifacts")
    b.add_argument("--manifest", required=True)
    b.add_argument("--plans", required=True, help="directory of <id>.json layouts")
    b.add_argument("--projector", required=True)
    b.add_argument("--metrics", default="all")
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench_evaluate)

    b = bench_sub.add_parser("run", help="plan and evaluate a whole manifest")
    b.add_argument("--manifest", required=True)
    b.add_argument("--db", required=True)
    b.add_argument("--config", required=True)
    b.add_argument("--projector", required=True)
    b.add_argument("--run-dir", dest="run_dir", required=True)
    b.add_argument("--metrics", default="all")
    b.add_argument("--caption-mode", dest="caption_mode",
                   choices=[m.value for m in CaptionMode], default="mix")
    b.add_argument("--db-fraction", dest="db_fraction", type=float, default=None)
    _add_plan_options(b)
    b.set_defaults(func=cmd_bench_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VslError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
