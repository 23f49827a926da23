"""Example-conversation store with top-k nearest-neighbor retrieval.

Audio embeddings arrive precomputed (the store never touches audio itself);
queries rank candidates by cosine similarity, with ties broken by ascending
id so runs are reproducible. The database is immutable after load and safe
to query concurrently.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .core import VideoSceneLayout, vsl_from_dict, vsl_to_dict
from .errors import DimMismatch, InsufficientCandidates, SchemaError

STRATEGIES = ("knn", "random", "fixed")


@dataclass(frozen=True)
class ExampleConversation:
    """One in-context exemplar: reference audio, its embedding, the written
    reasoning statement, and the reference layout."""

    id: str
    audio_ref: str
    embedding: tuple[float, ...]
    reasoning: str
    vsl: VideoSceneLayout

    def __post_init__(self):
        if not isinstance(self.embedding, tuple):
            object.__setattr__(self, "embedding", tuple(float(v) for v in self.embedding))


@dataclass(frozen=True)
class CandidateDatabase:
    entries: tuple[ExampleConversation, ...]

    def __post_init__(self):
        if not isinstance(self.entries, tuple):
            object.__setattr__(self, "entries", tuple(self.entries))
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise SchemaError("candidate database ids are not unique")
        dims = {len(e.embedding) for e in self.entries}
        if len(dims) > 1:
            raise SchemaError(f"mixed embedding dimensions in database: {sorted(dims)}")

    @property
    def dim(self) -> int | None:
        return len(self.entries[0].embedding) if self.entries else None

    def __len__(self) -> int:
        return len(self.entries)


def cosine_similarity(u, v) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def knn(db: CandidateDatabase, query, k: int, strategy: str = "knn",
        seed: int | None = None) -> list[ExampleConversation]:
    """Select ``k`` example conversations for a query embedding.

    ``knn`` returns the k entries with greatest cosine similarity to the
    query, descending, ties broken by ascending id. ``random`` draws k
    entries without replacement from a generator seeded with ``seed``;
    ``fixed`` always returns the first k entries by id.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return []
    if k > len(db):
        raise InsufficientCandidates(f"k={k} but database holds {len(db)} entries")

    if strategy == "fixed":
        return sorted(db.entries, key=lambda e: e.id)[:k]
    if strategy == "random":
        return random.Random(seed).sample(list(db.entries), k)

    query = tuple(float(v) for v in query)
    if len(query) != db.dim:
        raise DimMismatch(f"query dim {len(query)} != database dim {db.dim}")
    ranked = sorted(db.entries,
                    key=lambda e: (-cosine_similarity(query, e.embedding), e.id))
    return ranked[:k]


def subset(db: CandidateDatabase, fraction: float,
           seed: int | None = None) -> CandidateDatabase:
    """Seeded uniform subsample keeping ceil(fraction * size) entries."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    count = math.ceil(fraction * len(db))
    picked = sorted(random.Random(seed).sample(range(len(db)), count))
    return CandidateDatabase(tuple(db.entries[i] for i in picked))


def entry_to_dict(entry: ExampleConversation) -> dict:
    return {"id": entry.id, "audio_ref": entry.audio_ref,
            "embedding": list(entry.embedding), "reasoning": entry.reasoning,
            "vsl": vsl_to_dict(entry.vsl)}


def entry_from_dict(data: dict) -> ExampleConversation:
    for key in ("id", "audio_ref", "embedding", "reasoning", "vsl"):
        if key not in data:
            raise SchemaError(f"database entry missing key {key!r}")
    embedding = data["embedding"]
    if (not isinstance(embedding, list)
            or not all(isinstance(v, (int, float)) for v in embedding)
            or not all(math.isfinite(v) for v in embedding)):
        raise SchemaError("embedding must be a flat array of finite numbers")
    return ExampleConversation(
        id=str(data["id"]), audio_ref=str(data["audio_ref"]),
        embedding=tuple(float(v) for v in embedding),
        reasoning=str(data["reasoning"]), vsl=vsl_from_dict(data["vsl"]))


def save(db: CandidateDatabase, path: str | Path) -> None:
    """Write one JSON entry per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in db.entries:
            fh.write(json.dumps(entry_to_dict(entry)) + "\n")


def load(path: str | Path) -> CandidateDatabase:
    """Read a JSON-lines database; schema problems report their line number."""
    entries = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                entry = entry_from_dict(json.loads(line))
            except json.JSONDecodeError as err:
                raise SchemaError(f"invalid JSON ({err})", line=lineno) from err
            except SchemaError as err:
                raise SchemaError(str(err), line=lineno) from err
            if dim is None:
                dim = len(entry.embedding)
            elif len(entry.embedding) != dim:
                raise SchemaError(
                    f"embedding dim {len(entry.embedding)} != {dim}", line=lineno)
            entries.append(entry)
    return CandidateDatabase(tuple(entries))
