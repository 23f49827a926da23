"""Label projectors: pluggable text-phrase -> unit vector embedders.

Box matching across layouts replaces the hard equal-category indicator with
the cosine similarity of projected label phrases, so any projector that maps
identical phrases to identical unit-norm vectors can back the metrics. Three
implementations cover the practical range:

* HashedProjector   -- deterministic pseudo-random vectors, no data needed.
* TableProjector    -- precomputed label -> vector table loaded from JSON.
* OneHotProjector   -- orthogonal basis vectors; reduces the soft metrics to
                       their hard exact-category counterparts.

All projectors cache lookups behind a lock and hand out read-only arrays, so
one instance can serve any number of worker threads.
"""
from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path
from typing import Mapping, Protocol, runtime_checkable

import numpy as np

from .errors import ProjectorMiss, SchemaError


@runtime_checkable
class LabelProjector(Protocol):
    dim: int

    def project(self, label: str) -> np.ndarray:
        """Unit-norm vector for a label phrase; identical phrases map to
        identical vectors."""
        ...


class _CachedProjector:
    """Thread-safe memoization over a subclass-provided ``_embed``."""

    dim: int

    def __init__(self):
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def project(self, label: str) -> np.ndarray:
        with self._lock:
            vec = self._cache.get(label)
            if vec is None:
                vec = np.asarray(self._embed(label), dtype=np.float64)
                vec.setflags(write=False)
                self._cache[label] = vec
            return vec

    def _embed(self, label: str) -> np.ndarray:
        raise NotImplementedError


class HashedProjector(_CachedProjector):
    """Deterministic test projector: vectors seeded from the label text."""

    def __init__(self, dim: int = 64, salt: str = ""):
        super().__init__()
        self.dim = dim
        self.salt = salt

    def _embed(self, label: str) -> np.ndarray:
        digest = hashlib.sha256(f"{self.salt}\x1f{label}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        vec = rng.standard_normal(self.dim)
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            vec = np.zeros(self.dim)
            vec[0] = 1.0
            return vec
        return vec / norm


class TableProjector(_CachedProjector):
    """File-backed projector over a precomputed label -> vector table."""

    def __init__(self, table: Mapping[str, np.ndarray]):
        super().__init__()
        if not table:
            raise SchemaError("projector table is empty")
        normalized: dict[str, np.ndarray] = {}
        dim = None
        for label, raw in table.items():
            vec = np.asarray(raw, dtype=np.float64)
            if vec.ndim != 1:
                raise SchemaError(f"projector entry {label!r} is not a flat vector")
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise SchemaError(f"projector entry {label!r} has dim {vec.shape[0]}, "
                                  f"expected {dim}")
            norm = np.linalg.norm(vec)
            if norm < 1e-12:
                raise SchemaError(f"projector entry {label!r} is a zero vector")
            normalized[label] = vec / norm
        self.dim = int(dim)
        self._table = normalized

    @classmethod
    def from_file(cls, path: str | Path) -> "TableProjector":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise SchemaError(f"projector file {path}: {err}") from err
        if not isinstance(data, dict):
            raise SchemaError(f"projector file {path}: expected a JSON object")
        return cls(data)

    def _embed(self, label: str) -> np.ndarray:
        try:
            return self._table[label]
        except KeyError:
            raise ProjectorMiss(label) from None


class OneHotProjector(_CachedProjector):
    """Orthogonal projector: each distinct label gets its own basis vector.

    Equal labels are unit-self-similar and unequal labels exactly orthogonal,
    which reduces every soft metric to its hard-indicator form.
    """

    def __init__(self, dim: int = 4096):
        super().__init__()
        self.dim = dim

    def _embed(self, label: str) -> np.ndarray:
        index = len(self._cache)
        if index >= self.dim:
            raise SchemaError(f"one-hot projector exhausted its {self.dim} slots")
        vec = np.zeros(self.dim)
        vec[index] = 1.0
        return vec


def load_projector(spec: str) -> LabelProjector:
    """Build a projector from a CLI-style spec.

    ``hashed`` or ``hashed:<dim>`` gives the deterministic test projector,
    ``onehot`` the orthogonal one; anything else is read as a path to a JSON
    label -> vector table.
    """
    if spec == "onehot":
        return OneHotProjector()
    if spec == "hashed":
        return HashedProjector()
    if spec.startswith("hashed:"):
        return HashedProjector(dim=int(spec.split(":", 1)[1]))
    return TableProjector.from_file(spec)
