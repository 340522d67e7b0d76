"""Per-library vocabularies and sparse input vectors.

Text and categorical fields become binary presence dimensions, one per
``(field, token)`` entry in lexicographic order.  Numeric fields follow as a
block of min-max scaled dimensions.  Each library gets its own vocabulary, so
the two feature spaces are unrelated.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .datamodel import Library, MovieRecord
from .errors import ConfigError, DimensionMismatchError, EmptyInputError

TEXT_FIELDS = ("title", "storyline", "comments")
CATEGORICAL_FIELDS = ("genre", "country", "language", "director", "writer", "actor_actress")
NUMERIC_FIELDS = ("comment_count", "rating", "length_minutes", "year")


@dataclass(frozen=True)
class FeatureSpec:
    text_fields: tuple[str, ...] = TEXT_FIELDS
    categorical_fields: tuple[str, ...] = CATEGORICAL_FIELDS
    numeric_fields: tuple[str, ...] = NUMERIC_FIELDS
    min_token_count: int = 1

    def __post_init__(self):
        for name, allowed in (
            ("text_fields", TEXT_FIELDS),
            ("categorical_fields", CATEGORICAL_FIELDS),
            ("numeric_fields", NUMERIC_FIELDS),
        ):
            values = tuple(getattr(self, name))
            object.__setattr__(self, name, values)
            unknown = set(values) - set(allowed)
            if unknown:
                raise ConfigError(f"unknown {name}: {sorted(unknown)}")
        if not (self.text_fields or self.categorical_fields or self.numeric_fields):
            raise ConfigError("feature spec enables no field")
        if self.min_token_count < 1:
            raise ConfigError("min_token_count must be positive")

    @classmethod
    def from_mapping(cls, values) -> "FeatureSpec":
        def names(key, default):
            raw = values.get(key)
            if raw is None:
                return default
            return tuple(t.strip() for t in str(raw).replace(",", " ").split() if t.strip())

        unknown = set(values) - {"text_fields", "categorical_fields", "numeric_fields", "min_token_count"}
        if unknown:
            raise ConfigError(f"unknown [features] key(s): {sorted(unknown)}")
        return cls(
            text_fields=names("text_fields", TEXT_FIELDS),
            categorical_fields=names("categorical_fields", CATEGORICAL_FIELDS),
            numeric_fields=names("numeric_fields", NUMERIC_FIELDS),
            min_token_count=int(values.get("min_token_count", 1)),
        )

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def _text_tokens(m: MovieRecord, name: str) -> list[str]:
    if name == "title":
        return list(m.title)
    if name == "storyline":
        return list(m.storyline)
    return [t for c in m.top_comments for t in c]


def _categorical_values(m: MovieRecord, name: str) -> frozenset[str]:
    if name == "genre":
        return m.genres
    if name == "country":
        return m.countries
    if name == "language":
        return m.languages
    return m.role(name)


@dataclass(frozen=True)
class Vocabulary:
    entries: tuple[tuple[str, str], ...]
    numeric: tuple[tuple[str, float, float], ...]
    spec: FeatureSpec
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {e: i for i, e in enumerate(self.entries)})
        if len(self.index) != len(self.entries):
            raise ValueError("vocabulary entries must be unique")
        for name, lo, hi in self.numeric:
            if lo > hi:
                raise ValueError(f"numeric range for {name} has min > max")

    @property
    def dim(self) -> int:
        return len(self.entries) + len(self.numeric)

    def numeric_index(self, name: str) -> int | None:
        for j, (n, _, _) in enumerate(self.numeric):
            if n == name:
                return len(self.entries) + j
        return None

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "entries": [[i, f, t] for i, (f, t) in enumerate(self.entries)],
            "numeric": [[len(self.entries) + j, n, lo, hi] for j, (n, lo, hi) in enumerate(self.numeric)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        spec = FeatureSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in obj["spec"].items()})
        entries = sorted(obj["entries"], key=lambda e: e[0])
        if [e[0] for e in entries] != list(range(len(entries))):
            raise ValueError("vocabulary indices are not contiguous")
        numeric = sorted(obj["numeric"], key=lambda e: e[0])
        return cls(
            entries=tuple((f, t) for _, f, t in entries),
            numeric=tuple((n, float(lo), float(hi)) for _, n, lo, hi in numeric),
            spec=spec,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocabulary(lib: Library, spec: FeatureSpec) -> Vocabulary:
    counts: Counter = Counter()
    for m in lib.movies:
        for name in spec.text_fields:
            counts.update((name, t) for t in _text_tokens(m, name))
    keep = {e for e, c in counts.items() if c >= spec.min_token_count}
    for m in lib.movies:
        for name in spec.categorical_fields:
            keep.update((name, v) for v in _categorical_values(m, name))
    numeric = []
    for name in sorted(spec.numeric_fields):
        values = [getattr(m, name) for m in lib.movies if getattr(m, name) is not None]
        if values:
            numeric.append((name, float(min(values)), float(max(values))))
    vocab = Vocabulary(entries=tuple(sorted(keep)), numeric=tuple(numeric), spec=spec)
    if vocab.dim == 0:
        raise EmptyInputError(f"library {lib.library_id!r}: no feature survives pruning")
    return vocab


@dataclass(frozen=True)
class FeatureVector:
    dim: int
    entries: dict[int, float]

    def __post_init__(self):
        for i, v in self.entries.items():
            if not 0 <= i < self.dim:
                raise ValueError(f"index {i} outside dimension {self.dim}")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"value {v} at {i} outside [0, 1]")

    def __len__(self):
        return len(self.entries)

    def dense(self) -> np.ndarray:
        x = np.zeros(self.dim)
        if self.entries:
            idx = np.fromiter(self.entries.keys(), dtype=int)
            x[idx] = np.fromiter(self.entries.values(), dtype=float)
        return x

    def observed(self) -> np.ndarray:
        """Boolean mask of emitted entries (numeric fields count even when scaled to 0)."""
        mask = np.zeros(self.dim, dtype=bool)
        mask[list(self.entries)] = True
        return mask


def _scale(value, lo, hi):
    if hi == lo:
        return 0.5
    return float(min(1.0, max(0.0, (value - lo) / (hi - lo))))


def extract_features(m: MovieRecord, v: Vocabulary, spec: FeatureSpec | None = None) -> FeatureVector:
    if spec is not None and spec != v.spec:
        raise DimensionMismatchError("vocabulary was built from a different feature spec")
    spec = v.spec
    entries = {}
    for name in spec.text_fields:
        for t in _text_tokens(m, name):
            i = v.index.get((name, t))
            if i is not None:
                entries[i] = 1.0
    for name in spec.categorical_fields:
        for t in _categorical_values(m, name):
            i = v.index.get((name, t))
            if i is not None:
                entries[i] = 1.0
    base = len(v.entries)
    for j, (name, lo, hi) in enumerate(v.numeric):
        raw = getattr(m, name)
        if raw is not None:
            entries[base + j] = _scale(raw, lo, hi)
    return FeatureVector(v.dim, dict(sorted(entries.items())))


def feature_matrix(movies: Iterable[MovieRecord], v: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(values, observed)`` matrices, one row per movie."""
    movies = list(movies)
    X = np.zeros((len(movies), v.dim))
    M = np.zeros((len(movies), v.dim), dtype=bool)
    for r, m in enumerate(movies):
        fv = extract_features(m, v)
        if fv.entries:
            idx = np.fromiter(fv.entries.keys(), dtype=int)
            X[r, idx] = np.fromiter(fv.entries.values(), dtype=float)
            M[r, idx] = True
    return X, M


def export_triplets(X: np.ndarray, path: str | Path, observed: np.ndarray | None = None) -> None:
    """Write ``row,col,value`` lines for every observed (default: nonzero) cell."""
    mask = observed if observed is not None else X != 0
    rows, cols = np.nonzero(mask)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "value"])
        for r, c in zip(rows, cols):
            w.writerow([int(r), int(c), repr(float(X[r, c]))])
