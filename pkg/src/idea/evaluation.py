"""Metrics and the cross-validated evaluation protocol.

One experiment iterates over seeds and folds.  For every fold the test
positives are split by the missing ratio ``delta``: a kept part, a part whose
lib_a movies are deleted and a part whose lib_b movies are deleted.  Deleted
movies and every labelled pair touching them leave the fold, the coupled
autoencoders are trained on the surviving training pairs, and the surviving
test pairs are scored by negated latent distance.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Sequence

import numpy as np

from .autoenc import AutoencoderParams, HyperParams, SideFeatures, encode, train
from .baselines import exact_match, similarity_scores
from .datamodel import AnchorLinkSet, LabeledPair, Library
from .errors import ConfigError, EmptyInputError, InputError, InsufficientPairsError
from .features import FeatureSpec, Vocabulary, build_vocabulary, feature_matrix
from .fusion import (MODES, MissingReport, ScoredPair, distance_matrix, identify_missing,
                     links_from_distances, row_distances, write_scored_pairs)
from .ranking import (RankCriterion, compute_rank_targets, predict_rank, rank_missing, train_rank_model,
                      write_completions)

log = logging.getLogger(__name__)


# -- sampling and splits -----------------------------------------------------


def sample_negatives(positives: AnchorLinkSet, lib_a: Library, lib_b: Library, seed) -> list[LabeledPair]:
    """Positives plus an equal number of uniformly drawn non-linked cross pairs."""
    ids_a, ids_b = lib_a.ids, lib_b.ids
    k = len(positives)
    pos = positives.links
    available = len(ids_a) * len(ids_b) - sum(1 for a, b in pos if a in lib_a.by_id and b in lib_b.by_id)
    if available < k:
        raise InsufficientPairsError(f"need {k} negative pairs but only {available} non-linked pairs exist")
    rng = np.random.default_rng(seed)
    n_b = len(ids_b)
    neg: dict[int, None] = {}
    if available <= 4 * k:
        flat = [i * n_b + j for i, a in enumerate(ids_a) for j, b in enumerate(ids_b) if (a, b) not in pos]
        neg = dict.fromkeys(int(x) for x in rng.choice(flat, size=k, replace=False))
    else:
        while len(neg) < k:
            for x in rng.integers(0, len(ids_a) * n_b, size=2 * (k - len(neg))):
                x = int(x)
                if x in neg or (ids_a[x // n_b], ids_b[x % n_b]) in pos:
                    continue
                neg[x] = None
                if len(neg) == k:
                    break
    out = [LabeledPair(a, b, 1) for a, b in sorted(pos)]
    out += sorted((LabeledPair(ids_a[x // n_b], ids_b[x % n_b], -1) for x in neg), key=lambda p: (p.id_a, p.id_b))
    return out


def kfold_split(pairs: Sequence, folds: int, seed) -> list[tuple[list, list]]:
    pairs = list(pairs)
    if folds < 2:
        raise ConfigError("folds must be >= 2")
    if len(pairs) < folds:
        raise InsufficientPairsError(f"{len(pairs)} pairs cannot fill {folds} folds")
    order = np.random.default_rng(seed).permutation(len(pairs))
    parts = np.array_split(order, folds)
    out = []
    for k in range(folds):
        test = [pairs[i] for i in parts[k]]
        train_ = [pairs[i] for j, p in enumerate(parts) if j != k for i in p]
        out.append((train_, test))
    return out


def _round_half_up(x: Decimal) -> int:
    return int(x.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def delta_split(test_positives, delta: float, seed) -> tuple[list, list, list]:
    """Split ``S`` into ``(kept, delete lib_a side, delete lib_b side)``.

    ``|kept| = round_half_up((1 - delta) |S|)``; the rest is halved with the
    smaller half (floor) going to the lib_a-deletion part.
    """
    if not 0.0 <= delta <= 1.0:
        raise ConfigError(f"delta must lie in [0, 1], got {delta}")
    S = sorted(test_positives)
    n_keep = _round_half_up((1 - Decimal(str(delta))) * len(S))
    order = np.random.default_rng(seed).permutation(len(S))
    shuffled = [S[i] for i in order]
    kept, rest = shuffled[:n_keep], shuffled[n_keep:]
    half = len(rest) // 2
    return sorted(kept), sorted(rest[:half]), sorted(rest[half:])


# -- metrics -----------------------------------------------------------------


def _labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    if not np.all((y == 1) | (y == -1)):
        raise InputError("labels must be +1 or -1")
    return y


def auc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative, ties 1/2."""
    s = np.asarray(scores, dtype=float)
    y = _labels(labels)
    if s.shape != y.shape:
        raise InputError("scores and labels differ in length")
    pos, neg = s[y == 1], np.sort(s[y == -1])
    if len(pos) == 0 or len(neg) == 0:
        raise InputError("auc needs both positive and negative labels")
    lo = np.searchsorted(neg, pos, side="left")
    hi = np.searchsorted(neg, pos, side="right")
    # twice the win count including half-credit ties, kept integral until the end
    twice = 2 * int(lo.sum()) + int((hi - lo).sum())
    return twice / (2 * len(pos) * len(neg))


def precision_at_k(scores, labels, k: int) -> float:
    s = np.asarray(scores, dtype=float)
    y = _labels(labels)
    if not 1 <= k <= len(s):
        raise InputError(f"k={k} outside 1..{len(s)}")
    top = np.argsort(-s, kind="stable")[:k]
    return float(np.mean(y[top] == 1))


def confusion_metrics(predicted, labels) -> tuple[float, float, float, float]:
    """``(precision, recall, f1, accuracy)`` for the +1 class."""
    p, y = _labels(predicted), _labels(labels)
    if p.shape != y.shape:
        raise InputError("predicted and labels differ in length")
    n = len(y)
    tp = int(np.sum((p == 1) & (y == 1)))
    fp = int(np.sum((p == 1) & (y == -1)))
    fn = int(np.sum((p == -1) & (y == 1)))
    tn = n - tp - fp - fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / n if n else 0.0
    return precision, recall, f1, accuracy


def mae(predicted, truth) -> float:
    p, t = np.asarray(predicted, dtype=float), np.asarray(truth, dtype=float)
    if p.shape != t.shape:
        raise InputError("predicted and truth differ in length")
    if p.size == 0:
        raise EmptyInputError("mae of an empty list")
    return float(np.mean(np.abs(p - t)))


def mse(predicted, truth) -> float:
    p, t = np.asarray(predicted, dtype=float), np.asarray(truth, dtype=float)
    if p.shape != t.shape:
        raise InputError("predicted and truth differ in length")
    if p.size == 0:
        raise EmptyInputError("mse of an empty list")
    return float(np.mean((p - t) ** 2))


# -- configuration and reports ----------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    delta: float = 0.5
    folds: int = 10
    eta_grid: tuple[float, ...] = (1.0, 3.0)
    k_for_precision: int = 200
    seeds: tuple[int, ...] = (0,)
    criterion: str = "quality"
    mode: str = "threshold"
    # run only the first fold_limit folds of each seed (None = all)
    fold_limit: int | None = None
    baselines: bool = True
    baselines_only: bool = False
    direction: str = "a_to_b"
    # rank model trainer
    rank_lr: float = 0.1
    rank_epochs: int = 200

    def __post_init__(self):
        object.__setattr__(self, "eta_grid", tuple(float(e) for e in self.eta_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError(f"delta must lie in [0, 1], got {self.delta}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if not self.eta_grid or min(self.eta_grid) <= 0:
            raise ConfigError("eta_grid must hold positive thresholds")
        if self.k_for_precision < 1:
            raise ConfigError("k_for_precision must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for s in self.seeds:
            if not 0 <= s < 2**64:
                raise ConfigError(f"seed {s} is not a 64-bit unsigned integer")
        RankCriterion(self.criterion)
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.fold_limit is not None and not 1 <= self.fold_limit <= self.folds:
            raise ConfigError("fold_limit must lie in 1..folds")
        if self.direction not in ("a_to_b", "b_to_a"):
            raise ConfigError(f"unknown direction {self.direction!r}")
        if self.rank_lr < 0 or self.rank_epochs < 0:
            raise ConfigError("rank_lr and rank_epochs must be non-negative")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["eta_grid"], d["seeds"] = list(self.eta_grid), list(self.seeds)
        return d


def _floats(raw) -> list[float]:
    if isinstance(raw, (int, float)):
        return [float(raw)]
    if isinstance(raw, str):
        return [float(t) for t in raw.replace(",", " ").split()]
    return [float(t) for t in raw]


def _bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    s = str(raw).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def experiment_configs(values) -> list[ExperimentConfig]:
    """Parse an ``[eval]`` mapping; a list-valued ``delta`` yields one config per value."""
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown [eval] key(s): {sorted(unknown)}")
    kw = {}
    try:
        for key, raw in values.items():
            if key in ("folds", "k_for_precision", "rank_epochs"):
                kw[key] = int(raw)
            elif key == "fold_limit":
                kw[key] = None if str(raw).strip().lower() in ("", "none") else int(raw)
            elif key == "eta_grid":
                kw[key] = tuple(_floats(raw))
            elif key == "seeds":
                kw[key] = tuple(int(v) for v in _floats(raw)) if not isinstance(raw, str) else tuple(
                    int(t) for t in raw.replace(",", " ").split())
            elif key == "rank_lr":
                kw[key] = float(raw)
            elif key in ("baselines", "baselines_only"):
                kw[key] = _bool(raw)
            elif key != "delta":
                kw[key] = str(raw).strip()
        deltas = _floats(values.get("delta", 0.5))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[eval] {key}: {exc}") from None
    if not deltas:
        raise ConfigError("[eval] delta is empty")
    return [ExperimentConfig(delta=d, **kw) for d in deltas]


@dataclass(frozen=True)
class Stat:
    mean: float
    std: float

    @classmethod
    def of(cls, values) -> "Stat | None":
        v = [x for x in values if x is not None]
        if not v:
            return None
        return cls(float(np.mean(v)), float(np.std(v)))

    def to_json(self):
        return {"mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class ConfusionBlock:
    eta: float | None
    precision: Stat
    recall: Stat
    f1: Stat
    accuracy: Stat


@dataclass(frozen=True)
class MetricsReport:
    """Mean and std over folds of one method's metrics at one ``delta``."""

    method: str
    delta: float
    n_folds: int
    auc: Stat | None = None
    precision_at_k: Stat | None = None
    k: int | None = None
    confusion: tuple[ConfusionBlock, ...] = ()
    mae: Stat | None = None
    mse: Stat | None = None
    missing_precision: Stat | None = None
    missing_recall: Stat | None = None

    @property
    def precision(self):
        return self.confusion[0].precision if self.confusion else None

    @property
    def recall(self):
        return self.confusion[0].recall if self.confusion else None

    @property
    def f1(self):
        return self.confusion[0].f1 if self.confusion else None

    @property
    def accuracy(self):
        return self.confusion[0].accuracy if self.confusion else None

    def to_json(self) -> dict:
        def j(s):
            return None if s is None else s.to_json()

        return {
            "method": self.method,
            "delta": self.delta,
            "n_folds": self.n_folds,
            "auc": j(self.auc),
            "precision_at_k": j(self.precision_at_k),
            "k": self.k,
            "confusion": [
                {"eta": c.eta, "precision": j(c.precision), "recall": j(c.recall), "f1": j(c.f1), "accuracy": j(c.accuracy)}
                for c in self.confusion
            ],
            "mae": j(self.mae),
            "mse": j(self.mse),
            "missing_precision": j(self.missing_precision),
            "missing_recall": j(self.missing_recall),
        }

    def csv_rows(self):
        def row(metric, s, eta=""):
            if s is not None:
                yield [self.method, repr(self.delta), eta, metric, repr(s.mean), repr(s.std), self.n_folds]

        yield from row("auc", self.auc)
        yield from row(f"prec@{self.k}", self.precision_at_k)
        for c in self.confusion:
            eta = "" if c.eta is None else repr(c.eta)
            for name in ("precision", "recall", "f1", "accuracy"):
                yield from row(name, getattr(c, name), eta)
        yield from row("mae", self.mae)
        yield from row("mse", self.mse)
        yield from row("missing_precision", self.missing_precision)
        yield from row("missing_recall", self.missing_recall)


CSV_HEADER = ["method", "delta", "eta", "metric", "mean", "std", "n_folds"]


def write_reports(reports: Sequence[MetricsReport], json_path, csv_path, meta: dict | None = None) -> None:
    obj = {"meta": meta or {}, "reports": [r.to_json() for r in reports]}
    Path(json_path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in reports:
            w.writerows(r.csv_rows())


def config_hash(cfg: ExperimentConfig, hp: HyperParams, spec: FeatureSpec) -> str:
    blob = json.dumps({"eval": cfg.to_dict(), "train": hp.to_dict(), "features": spec.to_dict()}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# -- the protocol ------------------------------------------------------------


@dataclass
class FoldResult:
    seed: int
    fold: int
    test_pairs: list[LabeledPair]
    idea_scores: np.ndarray | None = None
    idea_auc: float | None = None
    idea_prec: float | None = None
    idea_confusion: dict = field(default_factory=dict)
    mae: float | None = None
    mse: float | None = None
    missing_precision: float | None = None
    missing_recall: float | None = None
    baseline: dict = field(default_factory=dict)
    # artifacts kept for reuse (e.g. ranking under another criterion)
    params: AutoencoderParams | None = field(default=None, repr=False)
    latents: dict = field(default_factory=dict, repr=False)
    libs: tuple = field(default=(), repr=False)
    train_links: AnchorLinkSet | None = field(default=None, repr=False)
    truth_missing: tuple = field(default=(), repr=False)
    full_libs: tuple = field(default=(), repr=False)
    train_distances: np.ndarray | None = field(default=None, repr=False)
    completions: dict = field(default_factory=dict, repr=False)
    report: MissingReport | None = field(default=None, repr=False)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reports: list[MetricsReport]
    folds: list[FoldResult]


def _features(lib: Library, vocab: Vocabulary) -> SideFeatures:
    X, M = feature_matrix(lib.movies, vocab)
    return SideFeatures(lib.ids, X, M)


def rank_errors(fold: FoldResult, criterion, lr: float = 0.1, epochs: int = 200) -> tuple[float, float, dict]:
    """Train both directional rank models on a fold and score the true missing movies.

    Returns ``(mae, mse, models)``.  Training targets come from the ablated
    libraries; the truth for a missing movie is its partner's target in the
    un-ablated library.
    """
    lib_a2, lib_b2 = fold.libs
    full_a, full_b = fold.full_libs
    truth_a, truth_b = fold.truth_missing  # lib_b ids missing from A with their deleted A partners, and reverse
    criterion = RankCriterion(str(criterion))
    Y = fold.latents
    tgt_a, tgt_b = compute_rank_targets(lib_a2, criterion), compute_rank_targets(lib_b2, criterion)
    model_a = train_rank_model(Y["b"], tgt_a, fold.train_links.b_to_a(), criterion, lr=lr, epochs=epochs,
                               seed=fold.seed, source_side="b", target_side="a")
    model_b = train_rank_model(Y["a"], tgt_b, fold.train_links.a_to_b(), criterion, lr=lr, epochs=epochs,
                               seed=fold.seed, source_side="a", target_side="b")
    full_ta, full_tb = compute_rank_targets(full_a, criterion), compute_rank_targets(full_b, criterion)
    pred, truth = [], []
    for b, a in sorted(truth_a.items()):
        if a in full_ta:
            pred.append(predict_rank(Y["b"][b], model_a))
            truth.append(full_ta[a])
    for a, b in sorted(truth_b.items()):
        if b in full_tb:
            pred.append(predict_rank(Y["a"][a], model_b))
            truth.append(full_tb[b])
    if not pred:
        return None, None, {"a": model_a, "b": model_b}
    return mae(pred, truth), mse(pred, truth), {"a": model_a, "b": model_b}


def run_fold(lib_a: Library, lib_b: Library, train_pairs, test_pairs, cfg: ExperimentConfig,
             hp: HyperParams, spec: FeatureSpec, seed: int, fold: int, dictionary=None) -> FoldResult:
    S = sorted((p.id_a, p.id_b) for p in test_pairs if p.label == 1)
    _, del_a, del_b = delta_split(S, cfg.delta, (seed, fold))
    gone_a, gone_b = {a for a, _ in del_a}, {b for _, b in del_b}
    lib_a2, lib_b2 = lib_a.without(gone_a), lib_b.without(gone_b)

    def alive(p):
        return p.id_a not in gone_a and p.id_b not in gone_b

    train2 = [p for p in train_pairs if alive(p)]
    test2 = [p for p in test_pairs if alive(p)]
    y = np.array([p.label for p in test2])
    k = min(cfg.k_for_precision, len(test2))
    res = FoldResult(seed, fold, test2)
    res.libs, res.full_libs = (lib_a2, lib_b2), (lib_a, lib_b)
    res.truth_missing = ({b: a for a, b in del_a}, {a: b for a, b in del_b})
    res.train_links = AnchorLinkSet(lib_a.library_id, lib_b.library_id,
                                    frozenset((p.id_a, p.id_b) for p in train2 if p.label == 1))
    both = len(set(y.tolist())) == 2

    if dictionary is not None and (cfg.baselines or cfg.baselines_only):
        jac = similarity_scores(lib_a2, lib_b2, dictionary, cfg.direction, [(p.id_a, p.id_b) for p in test2])
        js = np.array([s.score for s in jac])
        exact = exact_match(lib_a2, lib_b2, dictionary, cfg.direction)
        ep = np.array([1 if (p.id_a, p.id_b) in exact else -1 for p in test2])
        res.baseline = {
            "Jaccard": {"auc": auc(js, y) if both else None, "prec": precision_at_k(js, y, k) if k else None},
            "ExactMatch": {"auc": auc(ep, y) if both else None, "prec": precision_at_k(ep, y, k) if k else None,
                           "confusion": {None: confusion_metrics(ep, y)} if len(y) else {}},
        }
    if cfg.baselines_only:
        return res

    vocab_a, vocab_b = build_vocabulary(lib_a2, spec), build_vocabulary(lib_b2, spec)
    fa, fb = _features(lib_a2, vocab_a), _features(lib_b2, vocab_b)
    params, _ = train(fa, fb, train2, dataclasses.replace(hp, seed=seed))
    Y_a, Y_b = encode(fa.X, params, "a"), encode(fb.X, params, "b")
    res.params = params
    res.latents = {"a": dict(zip(fa.ids, Y_a)), "b": dict(zip(fb.ids, Y_b))}
    ra = np.array([fa.row[p.id_a] for p in test2], dtype=int)
    rb = np.array([fb.row[p.id_b] for p in test2], dtype=int)
    dist = row_distances(Y_a[ra], Y_b[rb])
    res.idea_scores = -dist
    pos = [p for p in train2 if p.label == 1]
    res.train_distances = row_distances(Y_a[[fa.row[p.id_a] for p in pos]], Y_b[[fb.row[p.id_b] for p in pos]])
    if both:
        res.idea_auc = auc(-dist, y)
    if k:
        res.idea_prec = precision_at_k(-dist, y, k)
    for eta in cfg.eta_grid:
        res.idea_confusion[eta] = confusion_metrics(np.where(dist < eta, 1, -1), y) if len(y) else None

    D = distance_matrix(Y_a, Y_b)
    inferred = links_from_distances(fa.ids, fb.ids, D, cfg.eta_grid[0], cfg.mode, (lib_a.library_id, lib_b.library_id))
    report = identify_missing(lib_a2, lib_b2, inferred, cfg.mode, cfg.eta_grid[0])
    res.report = report
    truth = {("a", b) for b in res.truth_missing[0]} | {("b", a) for a in res.truth_missing[1]}
    found = {("a", b) for b in report.missing_for_a} | {("b", a) for a in report.missing_for_b}
    res.missing_precision = len(truth & found) / len(found) if found else 0.0
    res.missing_recall = len(truth & found) / len(truth) if truth else None

    res.mae, res.mse, models = rank_errors(res, cfg.criterion, cfg.rank_lr, cfg.rank_epochs)
    res.completions = rank_missing(report, res.latents, models, (lib_a.library_id, lib_b.library_id))
    return res


def _aggregate(cfg: ExperimentConfig, folds: list[FoldResult]) -> list[MetricsReport]:
    n = len(folds)
    k = cfg.k_for_precision
    reports = []
    if not cfg.baselines_only:
        blocks = []
        for eta in cfg.eta_grid:
            vals = [f.idea_confusion.get(eta) for f in folds]
            vals = [v for v in vals if v is not None]
            blocks.append(ConfusionBlock(eta, *(Stat.of([v[i] for v in vals]) for i in range(4))))
        reports.append(MetricsReport(
            "IDEA", cfg.delta, n,
            auc=Stat.of([f.idea_auc for f in folds]),
            precision_at_k=Stat.of([f.idea_prec for f in folds]), k=k,
            confusion=tuple(blocks),
            mae=Stat.of([f.mae for f in folds]), mse=Stat.of([f.mse for f in folds]),
            missing_precision=Stat.of([f.missing_precision for f in folds]),
            missing_recall=Stat.of([f.missing_recall for f in folds]),
        ))
    for name in ("Jaccard", "ExactMatch"):
        rows = [f.baseline[name] for f in folds if name in f.baseline]
        if not rows:
            continue
        blocks = ()
        conf = [r["confusion"][None] for r in rows if r.get("confusion")]
        if conf:
            blocks = (ConfusionBlock(None, *(Stat.of([c[i] for c in conf]) for i in range(4))),)
        reports.append(MetricsReport(
            name, cfg.delta, n,
            auc=Stat.of([r["auc"] for r in rows]),
            precision_at_k=Stat.of([r["prec"] for r in rows]), k=k,
            confusion=blocks,
        ))
    return reports


def _write_fold(run_dir: Path, f: FoldResult) -> None:
    d = run_dir / f"seed{f.seed}-fold{f.fold}"
    d.mkdir(parents=True, exist_ok=True)
    if f.idea_scores is not None:
        write_scored_pairs((ScoredPair(p.id_a, p.id_b, -s) for p, s in zip(f.test_pairs, f.idea_scores)),
                           d / "test_distances.csv")
    if f.report is not None:
        f.report.save(d / "missing_report.json")
    for lib, rows in sorted(f.completions.items()):
        write_completions(rows, d / f"completion_{lib}.csv")


def run_experiment(lib_a: Library, lib_b: Library, links: AnchorLinkSet, cfg: ExperimentConfig,
                   hp: HyperParams, spec: FeatureSpec | None = None, dictionary=None,
                   run_dir: str | Path | None = None) -> ExperimentResult:
    """Cross-validated evaluation at one ``delta``; deterministic per (seeds, data, hp)."""
    spec = spec or FeatureSpec()
    folds_out = []
    for seed in cfg.seeds:
        labeled = sample_negatives(links, lib_a, lib_b, seed)
        splits = kfold_split(labeled, cfg.folds, seed)
        if cfg.fold_limit is not None:
            splits = splits[: cfg.fold_limit]
        for k, (tr, te) in enumerate(splits):
            log.info("delta=%s seed=%d fold=%d: %d train / %d test pairs", cfg.delta, seed, k, len(tr), len(te))
            folds_out.append(run_fold(lib_a, lib_b, tr, te, cfg, hp, spec, seed, k, dictionary))
    if run_dir is not None:
        run_dir = Path(run_dir) / f"run-{config_hash(cfg, hp, spec)}"
        for f in folds_out:
            _write_fold(run_dir, f)
    return ExperimentResult(cfg, _aggregate(cfg, folds_out), folds_out)
