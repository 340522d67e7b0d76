"""Rank targets and the sigmoid ranking model for missing movies.

A movie's target is its rank position divided by the library size, rank 1
being the best (highest rating or most comments), so good movies sit near 0.
A model ``r = sigmoid(w . y + b)`` is fitted on aligned movies using the
latent vector from one library and the rank from the other, then applied to
the movies that library is missing.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .autoenc import sigmoid
from .datamodel import AnchorLinkSet, Library
from .errors import ConfigError, DimensionMismatchError, EmptyInputError

log = logging.getLogger(__name__)

CRITERIA = {"quality": "rating", "popularity": "comment_count"}


@dataclass(frozen=True)
class RankCriterion:
    kind: str

    def __post_init__(self):
        if self.kind not in CRITERIA:
            raise ConfigError(f"unknown rank criterion {self.kind!r}; expected one of {sorted(CRITERIA)}")

    @property
    def field_name(self) -> str:
        return CRITERIA[self.kind]

    def __str__(self):
        return self.kind


def _criterion(c) -> RankCriterion:
    return c if isinstance(c, RankCriterion) else RankCriterion(str(c))


def compute_rank_targets(lib: Library, criterion) -> dict[str, float]:
    """``movie_id -> rank / |M|`` with ties broken by ascending id."""
    criterion = _criterion(criterion)
    if not lib.movies:
        raise EmptyInputError(f"library {lib.library_id!r} has no movies to rank")
    present = [m for m in lib.movies if getattr(m, criterion.field_name) is not None]
    if len(present) < len(lib.movies):
        log.warning("%s: %d movies lack %s and get no %s target", lib.library_id,
                    len(lib.movies) - len(present), criterion.field_name, criterion.kind)
    if not present:
        raise EmptyInputError(f"library {lib.library_id!r}: no movie has {criterion.field_name}")
    order = sorted(present, key=lambda m: (-getattr(m, criterion.field_name), m.id))
    n = len(order)
    return {m.id: (r + 1) / n for r, m in enumerate(order)}


@dataclass
class RankModel:
    w: np.ndarray
    b: float
    criterion: RankCriterion
    source_side: str
    target_side: str
    loss_history: list[float] = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.criterion = _criterion(self.criterion)
        if self.w.ndim != 1:
            raise ValueError("rank model weights must be a vector")

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion.kind,
            "source_side": self.source_side,
            "target_side": self.target_side,
            "w": self.w.tolist(),
            "b": float(self.b),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RankModel":
        return cls(np.asarray(obj["w"], dtype=float), float(obj["b"]), RankCriterion(obj["criterion"]),
                   obj["source_side"], obj["target_side"])


def predict_rank(y, model: RankModel):
    """``sigmoid(w . y + b)`` for one latent vector or a matrix of them."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != model.w.shape[0]:
        raise DimensionMismatchError(f"latent dim {y.shape[-1]} != rank model dim {model.w.shape[0]}")
    out = sigmoid(y @ model.w + model.b)
    return float(out) if out.ndim == 0 else out


def train_rank_model(embeddings: Mapping[str, np.ndarray], targets: Mapping[str, float],
                     aligned: AnchorLinkSet | Mapping[str, str], criterion="quality",
                     lr: float = 0.1, epochs: int = 200, seed: int = 0, batch_size: int | None = None,
                     source_side: str = "a", target_side: str = "b") -> RankModel:
    """Fit ``w, b`` by minibatch SGD on ``sum (sigmoid(w.y + b) - r)^2``.

    ``aligned`` maps source ids to target ids (an AnchorLinkSet is read as
    lib_a -> lib_b).  ``batch_size=None`` means full batch.
    """
    pairs = aligned.a_to_b() if isinstance(aligned, AnchorLinkSet) else dict(aligned)
    pairs = sorted((s, t) for s, t in pairs.items() if t in targets)
    if not pairs:
        raise EmptyInputError("no aligned pair with a rank target to train on")
    missing = [s for s, _ in pairs if s not in embeddings]
    if missing:
        raise ValueError(f"no embedding for source movies {missing[:5]}")
    Y = np.array([embeddings[s] for s, _ in pairs], dtype=float)
    r = np.array([targets[t] for _, t in pairs], dtype=float)
    n, d = Y.shape
    w, b = np.zeros(d), 0.0
    bs = n if batch_size is None else max(1, int(batch_size))
    history = []
    for e in range(epochs):
        order = np.random.default_rng((seed, e)).permutation(n) if bs < n else np.arange(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            p = sigmoid(Y[idx] @ w + b)
            g = 2.0 * (p - r[idx]) * p * (1.0 - p)
            # gradient of the mean over the batch keeps lr independent of n
            w -= lr * (Y[idx].T @ g) / len(idx)
            b -= lr * float(g.sum()) / len(idx)
        history.append(float(((sigmoid(Y @ w + b) - r) ** 2).sum()))
    return RankModel(w, b, _criterion(criterion), source_side, target_side, history)


@dataclass(frozen=True)
class Completion:
    destination_library: str
    source_id: str
    predicted_rank: float
    criterion: str


def rank_missing(report, latents: Mapping[str, Mapping[str, np.ndarray]], models: Mapping[str, RankModel],
                 lib_names=("A", "B")) -> dict[str, list[Completion]]:
    """Order each library's missing movies by predicted rank, best first.

    ``latents`` holds per-side ``id -> latent`` maps (keys ``"a"``, ``"b"``);
    ``models["a"]`` predicts ranks in lib_a from lib_b latents, and
    ``models["b"]`` the reverse.  Ties keep ascending id order.
    """
    out = {}
    for dest, src, missing in (("a", "b", report.missing_for_a), ("b", "a", report.missing_for_b)):
        name = lib_names[0] if dest == "a" else lib_names[1]
        ids = sorted(missing)
        if not ids:
            out[name] = []
            continue
        model = models[dest]
        pred = np.atleast_1d(predict_rank(np.array([latents[src][i] for i in ids]), model))
        order = sorted(range(len(ids)), key=lambda k: (pred[k], ids[k]))
        out[name] = [Completion(name, ids[k], float(pred[k]), model.criterion.kind) for k in order]
    return out


def write_completions(rows, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["destination_library", "source_id", "predicted_rank", "criterion"])
        for c in rows:
            w.writerow([c.destination_library, c.source_id, repr(c.predicted_rank), c.criterion])
