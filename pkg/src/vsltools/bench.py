"""Benchmark harness: manifests, augmentation, statistics, and evaluation.

A manifest is a JSON-lines file of sample records, each carrying a reference
audio, a ground-truth layout sequence, a domain split (Stationary indoor
scenes vs Translational outdoor ones), a source-count split (Single vs
Multiple sounding objects), and per-object spatial attribute tags. The
harness augments manifests with flip/reverse variants, prints breakdown
tables, plans every sample through a provider with resumable on-disk
artifacts, and aggregates similarity scores into the S/M/C x domain grid.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import (VideoSceneLayout, flip_horizontal, reverse_temporal,
                   vsl_from_dict, vsl_from_json, vsl_to_dict, vsl_to_json)
from .errors import (ExhaustedRetries, ProviderError, RuleViolation, SchemaError)
from .metrics import METRICS, score_sequence
from .planner import PlanConfig, PlanResult, plan
from .projectors import LabelProjector
from .retrieval import CandidateDatabase, subset

log = logging.getLogger(__name__)

DOMAINS = ("Stationary", "Translational")
SOURCE_SPLITS = ("Single", "Multiple")
PROVENANCES = ("original", "flipped", "reversed", "flipped+reversed")

STATIONARY_TAGS = ("left", "center", "right")
TRANSLATIONAL_TAGS = ("left-crossing", "right-crossing", "approaching", "receding")

_FLIP_TAG = {"left": "right", "right": "left",
             "left-crossing": "right-crossing", "right-crossing": "left-crossing"}
_REVERSE_TAG = {"approaching": "receding", "receding": "approaching",
                "left-crossing": "right-crossing", "right-crossing": "left-crossing"}

# Reverse augmentation is only safe where playing the audio backwards stays
# natural; high-frequency instrument sounds do not survive it.
DEFAULT_AUGMENTATION_POLICY: dict[str, frozenset[str]] = {
    "Stationary": frozenset({"flip"}),
    "Translational": frozenset({"flip", "reverse"}),
}


@dataclass(frozen=True)
class ObjectTags:
    """Spatial attribute tags for one tracked object."""

    object_id: int
    tags: tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.tags, tuple):
            object.__setattr__(self, "tags", tuple(self.tags))


@dataclass(frozen=True)
class SampleRecord:
    id: str
    audio_ref: str
    stereo: bool
    gt_vsl: VideoSceneLayout
    domain: str
    source_count: str
    embedding_ref: str | None = None
    spatial_tags: tuple[ObjectTags, ...] = ()
    provenance: str = "original"

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise SchemaError(f"sample {self.id}: unknown domain {self.domain!r}")
        if self.source_count not in SOURCE_SPLITS:
            raise SchemaError(f"sample {self.id}: unknown source split "
                              f"{self.source_count!r}")
        if self.provenance not in PROVENANCES:
            raise SchemaError(f"sample {self.id}: unknown provenance "
                              f"{self.provenance!r}")
        if not isinstance(self.spatial_tags, tuple):
            object.__setattr__(self, "spatial_tags", tuple(self.spatial_tags))


@dataclass(frozen=True)
class Manifest:
    records: tuple[SampleRecord, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.records, tuple):
            object.__setattr__(self, "records", tuple(self.records))
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise SchemaError("manifest ids are not unique")

    def __len__(self) -> int:
        return len(self.records)


# --- augmentation ------------------------------------------------------------


def _map_tags(tags: Iterable[ObjectTags], mapping: Mapping[str, str]) -> tuple[ObjectTags, ...]:
    return tuple(ObjectTags(t.object_id,
                            tuple(mapping.get(tag, tag) for tag in t.tags))
                 for t in tags)


def _flip_record(record: SampleRecord) -> SampleRecord:
    provenance = "flipped+reversed" if record.provenance == "reversed" else "flipped"
    return replace(record,
                   id=f"{record.id}-flipped",
                   gt_vsl=flip_horizontal(record.gt_vsl),
                   spatial_tags=_map_tags(record.spatial_tags, _FLIP_TAG),
                   provenance=provenance)


def _reverse_record(record: SampleRecord) -> SampleRecord:
    provenance = "flipped+reversed" if record.provenance == "flipped" else "reversed"
    return replace(record,
                   id=f"{record.id}-reversed",
                   gt_vsl=reverse_temporal(record.gt_vsl),
                   spatial_tags=_map_tags(record.spatial_tags, _REVERSE_TAG),
                   provenance=provenance)


def augment_manifest(manifest: Manifest,
                     rules: Mapping[str, Iterable[str]] | None = None) -> Manifest:
    """Add flip/reverse variants of every original record, per domain rules.

    ``rules`` maps a domain to the operations requested for it, defaulting
    to the augmentation policy (flip for Stationary, flip and reverse for
    Translational). Flipped records mirror left/right spatial tags and note
    the stereo channel swap through their provenance; reversed records swap
    motion-direction tags. Requesting reverse for a flip-only domain raises
    RuleViolation.
    """
    policy = manifest.metadata.get("augmentation_policy", DEFAULT_AUGMENTATION_POLICY)
    if rules is None:
        rules = policy
    normalized: dict[str, frozenset[str]] = {}
    for domain, ops in rules.items():
        if domain not in DOMAINS:
            raise RuleViolation(f"unknown domain {domain!r}")
        ops = frozenset(ops)
        unknown = ops - {"flip", "reverse"}
        if unknown:
            raise RuleViolation(f"unknown operations {sorted(unknown)}")
        allowed = frozenset(policy.get(domain, ()))
        if not ops <= allowed:
            raise RuleViolation(
                f"domain {domain} allows {sorted(allowed)}, requested {sorted(ops)}")
        normalized[domain] = ops

    records = list(manifest.records)
    for record in manifest.records:
        if record.provenance != "original":
            continue
        ops = normalized.get(record.domain, frozenset())
        if "flip" in ops:
            records.append(_flip_record(record))
        if "reverse" in ops:
            records.append(_reverse_record(record))
        if "flip" in ops and "reverse" in ops:
            records.append(_reverse_record(_flip_record(record)))
    return Manifest(tuple(records), dict(manifest.metadata))


# --- statistics --------------------------------------------------------------


@dataclass(frozen=True)
class ManifestStats:
    """Scene-distribution and per-object spatial-attribute breakdowns."""

    scene: dict
    spatial: dict

    def scene_row(self) -> tuple[int, ...]:
        """(Stationary S, M, subtotal, Translational S, M, subtotal, total)."""
        st, tr = self.scene["Stationary"], self.scene["Translational"]
        return (st["Single"], st["Multiple"], st["Subtotal"],
                tr["Single"], tr["Multiple"], tr["Subtotal"],
                self.scene["Total"])

    def render(self) -> str:
        st, tr = self.scene["Stationary"], self.scene["Translational"]
        sp_st, sp_tr = self.spatial["Stationary"], self.spatial["Translational"]
        lines = ["Scene distribution"]
        header = ["", "Single", "Multiple", "Subtotal"]
        rows = [["Stationary", st["Single"], st["Multiple"], st["Subtotal"]],
                ["Translational", tr["Single"], tr["Multiple"], tr["Subtotal"]],
                ["Total", "", "", self.scene["Total"]]]
        lines.extend(_format_table(header, rows))
        lines.append("")
        lines.append("Spatial attributes (per object)")
        header = ["", *STATIONARY_TAGS, "Subtotal"]
        rows = [["Stationary", *(sp_st[t] for t in STATIONARY_TAGS), sp_st["Subtotal"]]]
        lines.extend(_format_table(header, rows))
        header = ["", *TRANSLATIONAL_TAGS, "Subtotal"]
        rows = [["Translational", *(sp_tr[t] for t in TRANSLATIONAL_TAGS),
                 sp_tr["Subtotal"]]]
        lines.extend(_format_table(header, rows))
        lines.append(f"Total tagged objects: {self.spatial['Total']}")
        return "\n".join(lines)


def _format_table(header: Sequence, rows: Sequence[Sequence]) -> list[str]:
    table = [[str(c) for c in header]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
            for row in table]


def stats(manifest: Manifest) -> ManifestStats:
    """Count samples per scene split and attribute tags per object."""
    scene = {d: {"Single": 0, "Multiple": 0, "Subtotal": 0} for d in DOMAINS}
    for record in manifest.records:
        scene[record.domain][record.source_count] += 1
        scene[record.domain]["Subtotal"] += 1
    scene["Total"] = sum(scene[d]["Subtotal"] for d in DOMAINS)

    spatial = {"Stationary": {t: 0 for t in STATIONARY_TAGS},
               "Translational": {t: 0 for t in TRANSLATIONAL_TAGS}}
    for record in manifest.records:
        table = spatial[record.domain]
        for obj in record.spatial_tags:
            for tag in obj.tags:
                if tag in table:
                    table[tag] += 1
    for domain in DOMAINS:
        spatial[domain]["Subtotal"] = sum(
            v for k, v in spatial[domain].items() if k != "Subtotal")
    spatial["Total"] = sum(spatial[d]["Subtotal"] for d in DOMAINS)
    return ManifestStats(scene=scene, spatial=spatial)


# --- evaluation --------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityReport:
    """Mean scores (x100) per metric, domain, and S/M/C split."""

    cells: dict            # metric -> domain -> {"S"|"M"|"C": float}
    counts: dict           # domain -> {"Single"|"Multiple": int}
    per_sample: dict       # id -> metric -> score in [0, 1]
    failures: tuple[str, ...]
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"config": self.config, "counts": self.counts,
                "cells": self.cells, "failures": list(self.failures),
                "per_sample": self.per_sample}

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def render(self) -> str:
        header = ["Metric"]
        for domain in DOMAINS:
            for split in ("S", "M", "C"):
                header.append(f"{domain[:5]}.{split}")
        rows = []
        for metric in sorted(self.cells):
            row = [metric]
            for domain in DOMAINS:
                cell = self.cells[metric][domain]
                row.extend(f"{cell[s]:.2f}" for s in ("S", "M", "C"))
            rows.append(row)
        lines = _format_table(header, rows)
        lines.append(f"failures: {len(self.failures)}")
        if self.config:
            lines.append("config: " + json.dumps(self.config, sort_keys=True))
        return "\n".join(lines)


def evaluate(manifest: Manifest, plans: Mapping[str, VideoSceneLayout],
             projector: LabelProjector, metrics: Sequence[str] = METRICS,
             config: dict | None = None) -> SimilarityReport:
    """Score planned layouts against ground truth and aggregate the grid.

    Manifest ids without a plan count as failures and score 0. The C column
    is the count-weighted mean over the S and M samples of its domain, and
    aggregation iterates ids in sorted order, so the report is independent
    of manifest ordering.
    """
    per_sample: dict[str, dict[str, float]] = {}
    failures = []
    for record in sorted(manifest.records, key=lambda r: r.id):
        planned = plans.get(record.id)
        if planned is None:
            failures.append(record.id)
            per_sample[record.id] = {m: 0.0 for m in metrics}
            continue
        per_sample[record.id] = {
            m: score_sequence(planned, record.gt_vsl, m, projector).mean
            for m in metrics}

    by_id = {r.id: r for r in manifest.records}
    cells: dict[str, dict] = {}
    for metric in metrics:
        cells[metric] = {}
        for domain in DOMAINS:
            bucket = {"S": [], "M": [], "C": []}
            for sample_id in sorted(per_sample):
                record = by_id[sample_id]
                if record.domain != domain:
                    continue
                score = per_sample[sample_id][metric]
                bucket["S" if record.source_count == "Single" else "M"].append(score)
                bucket["C"].append(score)
            cells[metric][domain] = {
                split: 100.0 * (sum(values) / len(values)) if values else 0.0
                for split, values in bucket.items()}

    counts = {d: {"Single": 0, "Multiple": 0} for d in DOMAINS}
    for record in manifest.records:
        counts[record.domain][record.source_count] += 1
    return SimilarityReport(cells=cells, counts=counts, per_sample=per_sample,
                            failures=tuple(failures), config=dict(config or {}))


# --- planning runs -----------------------------------------------------------


def _safe_filename(sample_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", sample_id)


def _derived_seed(seed: int | None, sample_id: str) -> int | None:
    if seed is None:
        return None
    digest = hashlib.sha256(f"{seed}:{sample_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def load_embedding(path: str | Path) -> tuple[float, ...]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise SchemaError(f"embedding file {path}: expected a JSON array")
    return tuple(float(v) for v in data)


def run_benchmark(manifest: Manifest, db: CandidateDatabase, plan_cfg: PlanConfig,
                  provider, projector: LabelProjector, run_dir: str | Path,
                  metrics: Sequence[str] = METRICS, caption_mode: str = "mix",
                  db_fraction: float | None = None) -> SimilarityReport:
    """Plan every manifest sample, then evaluate the results.

    One layout JSON is written per sample under ``run_dir/plans``; samples
    whose artifact already exists are skipped, which makes interrupted runs
    resumable without duplicate provider calls. Per-sample planning failures
    are folded into the report as score-0 failures; only configuration
    errors abort the run.
    """
    run_dir = Path(run_dir)
    plans_dir = run_dir / "plans"
    plans_dir.mkdir(parents=True, exist_ok=True)

    plans: dict[str, VideoSceneLayout] = {}
    for record in sorted(manifest.records, key=lambda r: r.id):
        artifact = plans_dir / f"{_safe_filename(record.id)}.json"
        if artifact.exists():
            plans[record.id] = vsl_from_json(artifact.read_text(encoding="utf-8"))
            continue
        try:
            result = _plan_sample(record, db, plan_cfg, provider, db_fraction)
        except (ExhaustedRetries, ProviderError, SchemaError, OSError) as err:
            log.warning("sample %s failed: %s", record.id, err)
            continue
        plans[record.id] = result.parsed.vsl
        artifact.write_text(vsl_to_json(result.parsed.vsl, indent=2), encoding="utf-8")

    config = {"k": plan_cfg.k, "strategy": plan_cfg.strategy,
              "temperature": plan_cfg.temperature, "caption_mode": caption_mode,
              "seed": plan_cfg.seed, "model": plan_cfg.model,
              "metrics": list(metrics), "db_fraction": db_fraction}
    report = evaluate(manifest, plans, projector, metrics, config=config)
    (run_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (run_dir / "report.txt").write_text(report.render() + "\n", encoding="utf-8")
    return report


def _plan_sample(record: SampleRecord, db: CandidateDatabase, cfg: PlanConfig,
                 provider, db_fraction: float | None) -> PlanResult:
    embedding = None
    if cfg.k > 0 and cfg.strategy == "knn":
        if record.embedding_ref is None:
            raise SchemaError(f"sample {record.id} has no embedding_ref but "
                              "strategy knn needs one")
        embedding = load_embedding(record.embedding_ref)
    sample_cfg = replace(cfg, seed=_derived_seed(cfg.seed, record.id))
    effective_db = db
    if db_fraction is not None:
        effective_db = subset(db, db_fraction,
                              seed=_derived_seed(cfg.seed or 0, "db:" + record.id))
    return plan(record.audio_ref, embedding, effective_db, sample_cfg, provider)


# --- manifest serialization --------------------------------------------------


def record_to_dict(record: SampleRecord) -> dict:
    return {"id": record.id, "audio_ref": record.audio_ref,
            "stereo": record.stereo, "embedding_ref": record.embedding_ref,
            "domain": record.domain, "source_count": record.source_count,
            "spatial_tags": {str(t.object_id): list(t.tags)
                             for t in record.spatial_tags},
            "provenance": record.provenance,
            "gt_vsl": vsl_to_dict(record.gt_vsl)}


def record_from_dict(data: Mapping) -> SampleRecord:
    for key in ("id", "audio_ref", "domain", "source_count", "gt_vsl"):
        if key not in data:
            raise SchemaError(f"sample record missing key {key!r}")
    tags = tuple(ObjectTags(int(obj_id), tuple(tag_list))
                 for obj_id, tag_list in sorted((data.get("spatial_tags") or {}).items(),
                                                key=lambda kv: int(kv[0])))
    return SampleRecord(
        id=str(data["id"]), audio_ref=str(data["audio_ref"]),
        stereo=bool(data.get("stereo", True)),
        embedding_ref=data.get("embedding_ref"),
        gt_vsl=vsl_from_dict(data["gt_vsl"]),
        domain=str(data["domain"]), source_count=str(data["source_count"]),
        spatial_tags=tags, provenance=str(data.get("provenance", "original")))


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if manifest.metadata:
            fh.write(json.dumps({"dataset": manifest.metadata}) + "\n")
        for record in manifest.records:
            fh.write(json.dumps(record_to_dict(record)) + "\n")


def load_manifest(path: str | Path) -> Manifest:
    records = []
    metadata: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as err:
                raise SchemaError(f"invalid JSON ({err})", line=lineno) from err
            if "dataset" in data and "id" not in data:
                metadata = dict(data["dataset"])
                continue
            try:
                records.append(record_from_dict(data))
            except SchemaError as err:
                raise SchemaError(str(err), line=lineno) from err
    return Manifest(tuple(records), metadata)
