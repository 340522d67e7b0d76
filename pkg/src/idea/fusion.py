"""Anchor-link inference and missing-movie identification from latent vectors."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .autoenc import AutoencoderParams, encode
from .datamodel import AnchorLinkSet, Library, LabeledPair
from .errors import ConfigError, DimensionMismatchError
from .features import Vocabulary, feature_matrix

MODES = ("threshold", "greedy")


@dataclass(frozen=True)
class ScoredPair:
    id_a: str
    id_b: str
    distance: float
    score: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.score is None:
            object.__setattr__(self, "score", -float(self.distance))


def pair_distance(y_a, y_b) -> float:
    y_a, y_b = np.asarray(y_a, dtype=float), np.asarray(y_b, dtype=float)
    if y_a.shape != y_b.shape:
        raise DimensionMismatchError(f"latent shapes differ: {y_a.shape} vs {y_b.shape}")
    d = y_a - y_b
    return float(np.sqrt(np.sum(d * d)))


def row_distances(Y_a: np.ndarray, Y_b: np.ndarray) -> np.ndarray:
    """Distances between matching rows of two equally shaped matrices."""
    d = Y_a - Y_b
    return np.sqrt(np.sum(d * d, axis=-1))


def distance_matrix(Y_a: np.ndarray, Y_b: np.ndarray) -> np.ndarray:
    """All cross distances, ``D[i, j] = ||Y_a[i] - Y_b[j]||``."""
    if Y_a.shape[1] != Y_b.shape[1]:
        raise DimensionMismatchError(f"latent dims differ: {Y_a.shape[1]} vs {Y_b.shape[1]}")
    # explicit differences (chunked) rather than the Gram expansion, so that
    # entries agree exactly with pair_distance
    D = np.empty((Y_a.shape[0], Y_b.shape[0]))
    step = max(1, 4_000_000 // max(1, Y_b.size))
    for lo in range(0, Y_a.shape[0], step):
        diff = Y_a[lo:lo + step, None, :] - Y_b[None, :, :]
        D[lo:lo + step] = np.sqrt(np.sum(diff * diff, axis=2))
    return D


def classify_pairs(pairs: Iterable[ScoredPair], eta: float) -> list[LabeledPair]:
    if not eta > 0:
        raise ConfigError(f"eta must be positive, got {eta}")
    return [LabeledPair(p.id_a, p.id_b, 1 if p.distance < eta else -1) for p in pairs]


def embed_library(lib: Library, vocab: Vocabulary, params: AutoencoderParams, side: str) -> np.ndarray:
    X, _ = feature_matrix(lib.movies, vocab)
    return encode(X, params, side)


def links_from_distances(ids_a: Sequence[str], ids_b: Sequence[str], D: np.ndarray, eta: float,
                         mode: str = "threshold", lib_names=("A", "B")) -> AnchorLinkSet:
    if mode not in MODES:
        raise ConfigError(f"unknown inference mode {mode!r}; expected one of {MODES}")
    rows, cols = np.nonzero(D < eta)
    if mode == "threshold":
        links = frozenset((ids_a[i], ids_b[j]) for i, j in zip(rows, cols))
        return AnchorLinkSet(lib_names[0], lib_names[1], links, one_to_one=False)
    # greedy: ascending distance, ties by (id_a, id_b)
    cand = sorted(zip(D[rows, cols], (ids_a[i] for i in rows), (ids_b[j] for j in cols)))
    used_a, used_b, links = set(), set(), set()
    for _, a, b in cand:
        if a in used_a or b in used_b:
            continue
        used_a.add(a)
        used_b.add(b)
        links.add((a, b))
    return AnchorLinkSet(lib_names[0], lib_names[1], frozenset(links))


def infer_anchor_links(lib_a: Library, lib_b: Library, params: AutoencoderParams, eta: float,
                       mode: str = "threshold", vocab_a: Vocabulary | None = None,
                       vocab_b: Vocabulary | None = None, Y_a=None, Y_b=None) -> AnchorLinkSet:
    """Link every cross pair closer than ``eta`` (threshold) or match greedily one-to-one.

    Latents are taken from ``Y_a``/``Y_b`` when given, otherwise computed from
    the vocabularies.
    """
    if Y_a is None:
        Y_a = embed_library(lib_a, vocab_a, params, "a")
    if Y_b is None:
        Y_b = embed_library(lib_b, vocab_b, params, "b")
    D = distance_matrix(np.atleast_2d(Y_a), np.atleast_2d(Y_b))
    return links_from_distances(lib_a.ids, lib_b.ids, D, eta, mode, (lib_a.library_id, lib_b.library_id))


@dataclass(frozen=True)
class MissingReport:
    missing_for_a: frozenset[str]
    missing_for_b: frozenset[str]
    inferred_links: AnchorLinkSet
    mode: str = "threshold"
    eta: float | None = None

    def __post_init__(self):
        if self.missing_for_a & self.inferred_links.matched_b():
            raise ValueError("a matched lib_b movie is reported missing")
        if self.missing_for_b & self.inferred_links.matched_a():
            raise ValueError("a matched lib_a movie is reported missing")

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "eta": self.eta,
            "counts": {
                "inferred_links": len(self.inferred_links),
                "missing_for_a": len(self.missing_for_a),
                "missing_for_b": len(self.missing_for_b),
            },
            "inferred_links": [list(p) for p in self.inferred_links],
            "missing_for_a": sorted(self.missing_for_a),
            "missing_for_b": sorted(self.missing_for_b),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")


def identify_missing(lib_a: Library, lib_b: Library, inferred: AnchorLinkSet,
                     mode: str = "threshold", eta: float | None = None) -> MissingReport:
    ids_a, ids_b = set(lib_a.ids), set(lib_b.ids)
    bad = (inferred.matched_a() - ids_a) | (inferred.matched_b() - ids_b)
    if bad:
        raise ValueError(f"inferred links reference unknown movies: {sorted(bad)[:5]}")
    return MissingReport(
        missing_for_a=frozenset(ids_b - inferred.matched_b()),
        missing_for_b=frozenset(ids_a - inferred.matched_a()),
        inferred_links=inferred,
        mode=mode,
        eta=eta,
    )


def write_scored_pairs(pairs: Iterable[ScoredPair], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id_a", "id_b", "distance", "score"])
        for p in pairs:
            w.writerow([p.id_a, p.id_b, repr(float(p.distance)), repr(float(p.score))])
