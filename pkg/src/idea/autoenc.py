"""Coupled sigmoid autoencoders trained with a fusion loss.

Each library owns an encoder stack ``x -> y`` and a mirrored decoder stack
``y -> x_hat``, sigmoid at every layer.  Both encoders end in the same latent
dimension, so the latent vectors of the two libraries live in one space.  The
training objective over a minibatch of labelled cross-library pairs is::

    L = L_e + alpha * L_f + beta * L_reg

``L_e`` sums the weighted reconstruction error of every distinct movie in the
batch, ``L_f`` sums ``s * ||y_a - y_b||^2`` over the pairs, and ``L_reg`` is
the squared Frobenius norm of all weight matrices (biases excluded).
Gradients are computed by hand with backpropagation.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .datamodel import LabeledPair
from .errors import ConfigError, DimensionMismatchError, DivergenceError, InputError
from .features import FeatureVector

SIDES = ("a", "b")
CHECKPOINT_FORMAT = "idea-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class HyperParams:
    layer_dims: tuple[int, ...] = (256, 128)
    alpha: float = 10.0
    beta: float = 0.01
    gamma: float = 1000.0
    eta: float = 1.0
    learning_rate: float = 0.05
    epochs: int = 50
    batch_size: int = 512
    seed: int = 0
    # hinge variant for negative pairs; None keeps the plain signed loss
    margin: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        if not self.layer_dims or min(self.layer_dims) < 1:
            raise ConfigError("layer_dims must be a non-empty list of positive integers")
        if self.gamma < 1:
            raise ConfigError("gamma must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be non-negative")
        if self.eta <= 0 or self.learning_rate < 0:
            raise ConfigError("eta must be positive and learning_rate non-negative")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if self.margin is not None and self.margin <= 0:
            raise ConfigError("margin must be positive when set")

    @property
    def latent_dim(self) -> int:
        return self.layer_dims[-1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["layer_dims"] = list(self.layer_dims)
        return d

    @classmethod
    def from_mapping(cls, values) -> "HyperParams":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown [train] key(s): {sorted(unknown)}")
        kw = {}
        try:
            for key, raw in values.items():
                if key == "layer_dims":
                    kw[key] = tuple(int(t) for t in str(raw).replace(",", " ").split()) if isinstance(raw, str) else tuple(raw)
                elif key in ("epochs", "batch_size", "seed"):
                    kw[key] = int(raw)
                elif key == "margin":
                    kw[key] = None if raw in (None, "", "none", "None") else float(raw)
                else:
                    kw[key] = float(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[train] {key}: {exc}") from None
        return cls(**kw)


@dataclass
class SideParams:
    enc_W: list[np.ndarray]
    enc_b: list[np.ndarray]
    dec_W: list[np.ndarray]
    dec_b: list[np.ndarray]

    @property
    def input_dim(self) -> int:
        return self.enc_W[0].shape[1]

    def layers(self):
        """(W, b) pairs along the full encode-decode chain."""
        return list(zip(self.enc_W + self.dec_W, self.enc_b + self.dec_b))

    def arrays(self) -> list[np.ndarray]:
        return self.enc_W + self.enc_b + self.dec_W + self.dec_b

    def copy(self) -> "SideParams":
        return SideParams(*([a.copy() for a in group] for group in (self.enc_W, self.enc_b, self.dec_W, self.dec_b)))

    def zeros_like(self) -> "SideParams":
        return SideParams(*([np.zeros_like(a) for a in group] for group in (self.enc_W, self.enc_b, self.dec_W, self.dec_b)))


@dataclass
class AutoencoderParams:
    a: SideParams
    b: SideParams

    def side(self, name: str) -> SideParams:
        if name not in SIDES:
            raise ValueError(f"side must be 'a' or 'b', got {name!r}")
        return self.a if name == "a" else self.b

    def arrays(self) -> list[np.ndarray]:
        return self.a.arrays() + self.b.arrays()

    def copy(self) -> "AutoencoderParams":
        return AutoencoderParams(self.a.copy(), self.b.copy())

    def zeros_like(self) -> "AutoencoderParams":
        return AutoencoderParams(self.a.zeros_like(), self.b.zeros_like())

    @property
    def latent_dim(self) -> int:
        return self.a.enc_W[-1].shape[0]

    def to_json(self) -> dict:
        def mats(arrs):
            return [{"shape": list(a.shape), "data": a.ravel(order="C").tolist()} for a in arrs]

        return {
            s: {
                "input_dim": self.side(s).input_dim,
                "enc_W": mats(self.side(s).enc_W),
                "enc_b": mats(self.side(s).enc_b),
                "dec_W": mats(self.side(s).dec_W),
                "dec_b": mats(self.side(s).dec_b),
            }
            for s in SIDES
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AutoencoderParams":
        sides = {}
        for s in SIDES:
            if s not in obj:
                raise InputError(f"checkpoint field 'params.{s}' is missing")
            groups = []
            for g in ("enc_W", "enc_b", "dec_W", "dec_b"):
                where = f"params.{s}.{g}"
                try:
                    arrs = [
                        np.asarray(m["data"], dtype=float).reshape(m["shape"], order="C")
                        for m in obj[s][g]
                    ]
                except (KeyError, TypeError, ValueError) as exc:
                    raise InputError(f"checkpoint field {where!r} is malformed: {exc}") from None
                if not all(np.all(np.isfinite(a)) for a in arrs):
                    raise InputError(f"checkpoint field {where!r} holds non-finite values")
                groups.append(arrs)
            sp = SideParams(*groups)
            _check_chain(sp, f"params.{s}")
            sides[s] = sp
        if sides["a"].enc_W[-1].shape[0] != sides["b"].enc_W[-1].shape[0]:
            raise InputError("checkpoint field 'params': latent dimensions of the two sides differ")
        return cls(sides["a"], sides["b"])


def _check_chain(sp: SideParams, where: str) -> None:
    if not (len(sp.enc_W) == len(sp.enc_b) == len(sp.dec_W) == len(sp.dec_b)) or not sp.enc_W:
        raise InputError(f"checkpoint field {where!r}: layer counts disagree")
    width = sp.enc_W[0].shape[1]
    for i, (W, b) in enumerate(sp.layers()):
        if W.ndim != 2 or W.shape[1] != width or b.shape != (W.shape[0],):
            raise InputError(f"checkpoint field {where!r}: layer {i} shapes do not chain")
        width = W.shape[0]
    if width != sp.enc_W[0].shape[1]:
        raise InputError(f"checkpoint field {where!r}: decoder output does not match input dim")


def init_params(d_a: int, d_b: int, hp: HyperParams) -> AutoencoderParams:
    """Glorot-uniform weights, zero biases; side a is drawn before side b."""
    if d_a < 1 or d_b < 1:
        raise ValueError("input dimensions must be positive")
    rng = np.random.default_rng(hp.seed)

    def side(d):
        dims = [d, *hp.layer_dims]
        enc = [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]
        dec = [(o, i) for i, o in reversed(enc)]
        draw = lambda shape: rng.uniform(-1.0, 1.0, size=shape) * math.sqrt(6.0 / (shape[0] + shape[1]))
        return SideParams(
            enc_W=[draw(s) for s in enc],
            enc_b=[np.zeros(s[0]) for s in enc],
            dec_W=[draw(s) for s in dec],
            dec_b=[np.zeros(s[0]) for s in dec],
        )

    return AutoencoderParams(side(d_a), side(d_b))


def sigmoid(z):
    return expit(z)


def _as_array(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.dense()
    return np.asarray(x, dtype=float)


def _forward(X: np.ndarray, sp: SideParams) -> list[np.ndarray]:
    acts = [X]
    for W, b in sp.layers():
        acts.append(expit(acts[-1] @ W.T + b))
    return acts


def encode(x, params: AutoencoderParams, side: str) -> np.ndarray:
    """Latent vector(s) for one feature vector or a row matrix of them."""
    sp = params.side(side)
    X = _as_array(x)
    if X.shape[-1] != sp.input_dim:
        raise DimensionMismatchError(f"side {side}: input has dim {X.shape[-1]}, expected {sp.input_dim}")
    h = X
    for W, b in zip(sp.enc_W, sp.enc_b):
        h = expit(h @ W.T + b)
    return h


def decode(y, params: AutoencoderParams, side: str) -> np.ndarray:
    sp = params.side(side)
    h = np.asarray(y, dtype=float)
    if h.shape[-1] != sp.dec_W[0].shape[1]:
        raise DimensionMismatchError(f"side {side}: latent has dim {h.shape[-1]}, expected {sp.dec_W[0].shape[1]}")
    for W, b in zip(sp.dec_W, sp.dec_b):
        h = expit(h @ W.T + b)
    return h


def _weights(x, gamma, observed):
    mask = (np.asarray(x) != 0) if observed is None else np.asarray(observed, dtype=bool)
    return np.where(mask, gamma, 1.0)


def reconstruction_loss(x, x_hat, gamma: float, observed=None) -> float:
    """Sum of squared ``(x_hat - x) * c`` with ``c = gamma`` on observed entries, 1 elsewhere.

    ``observed`` defaults to the nonzero pattern of ``x``; pass the feature
    mask instead so that numeric fields scaled to exactly 0 keep weight gamma.
    """
    x = _as_array(x)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise DimensionMismatchError(f"shapes {x.shape} and {x_hat.shape} differ")
    c = _weights(x, gamma, observed)
    return float(np.sum(((x_hat - x) * c) ** 2))


def fusion_loss(y_a, y_b, s, margin: float | None = None) -> float:
    """``s * ||y_a - y_b||^2`` summed over pairs (rows).

    With ``margin`` set, negative pairs contribute ``max(0, margin - ||y_a - y_b||^2)``.
    """
    y_a = np.asarray(y_a, dtype=float)
    y_b = np.asarray(y_b, dtype=float)
    if y_a.shape != y_b.shape:
        raise DimensionMismatchError(f"latent shapes {y_a.shape} and {y_b.shape} differ")
    sq = np.sum((y_a - y_b) ** 2, axis=-1)
    s = np.asarray(s, dtype=float)
    if margin is None:
        return float(np.sum(s * sq))
    return float(np.sum(np.where(s > 0, sq, np.maximum(0.0, margin - sq))))


def regularizer(params: AutoencoderParams | Iterable[SideParams]) -> float:
    sides = [params.a, params.b] if isinstance(params, AutoencoderParams) else list(params)
    return float(sum(np.sum(W * W) for sp in sides for W in sp.enc_W + sp.dec_W))


@dataclass(frozen=True)
class Batch:
    """Distinct movies per side plus pairs given as row indices into them."""

    x_a: np.ndarray
    obs_a: np.ndarray
    x_b: np.ndarray
    obs_b: np.ndarray
    pair_a: np.ndarray
    pair_b: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)


def make_batch(X_a, M_a, X_b, M_b, rows_a, rows_b, labels) -> Batch:
    """Gather the distinct rows touched by the pairs; each movie enters once."""
    rows_a = np.asarray(rows_a, dtype=int)
    rows_b = np.asarray(rows_b, dtype=int)
    ua, pa = np.unique(rows_a, return_inverse=True)
    ub, pb = np.unique(rows_b, return_inverse=True)
    return Batch(
        x_a=X_a[ua], obs_a=M_a[ua], x_b=X_b[ub], obs_b=M_b[ub],
        pair_a=pa, pair_b=pb, labels=np.asarray(labels, dtype=float),
    )


@dataclass(frozen=True)
class LossBreakdown:
    recon: float
    fusion: float  # alpha * L_f
    reg: float  # beta * L_reg
    total: float

    def finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.recon, self.fusion, self.reg, self.total))


def _side_backward(sp: SideParams, acts, x, obs, gamma, latent_grad, grad: SideParams):
    k = len(sp.enc_W)
    c2 = np.where(obs, gamma * gamma, 1.0)
    x_hat = acts[-1]
    d_act = 2.0 * c2 * (x_hat - x)
    layers = sp.layers()
    gW = grad.enc_W + grad.dec_W
    gb = grad.enc_b + grad.dec_b
    for l in range(len(layers) - 1, -1, -1):
        a_out = acts[l + 1]
        if l + 1 == k:
            d_act = d_act + latent_grad
        delta = d_act * a_out * (1.0 - a_out)
        gW[l] += delta.T @ acts[l]
        gb[l] += delta.sum(axis=0)
        if l > 0:
            d_act = delta @ layers[l][0]


def loss_and_gradients(batch: Batch, params: AutoencoderParams, hp: HyperParams):
    """Total loss breakdown and its exact gradient w.r.t. every parameter."""
    if len(batch) == 0:
        raise InputError("batch is empty")
    k = len(params.a.enc_W)
    acts_a = _forward(batch.x_a, params.a)
    acts_b = _forward(batch.x_b, params.b)
    recon = reconstruction_loss(batch.x_a, acts_a[-1], hp.gamma, batch.obs_a) + reconstruction_loss(
        batch.x_b, acts_b[-1], hp.gamma, batch.obs_b
    )
    y_a, y_b = acts_a[k], acts_b[k]
    diff = y_a[batch.pair_a] - y_b[batch.pair_b]
    sq = np.sum(diff * diff, axis=1)
    s = batch.labels
    if hp.margin is None:
        lf = float(np.sum(s * sq))
        coef = 2.0 * hp.alpha * s
    else:
        active = (s < 0) & (sq < hp.margin)
        lf = float(np.sum(np.where(s > 0, sq, np.maximum(0.0, hp.margin - sq))))
        coef = 2.0 * hp.alpha * np.where(s > 0, 1.0, np.where(active, -1.0, 0.0))
    g_pair = coef[:, None] * diff
    lat_a = np.zeros_like(y_a)
    lat_b = np.zeros_like(y_b)
    np.add.at(lat_a, batch.pair_a, g_pair)
    np.add.at(lat_b, batch.pair_b, -g_pair)

    reg = regularizer(params)
    breakdown = LossBreakdown(
        recon=recon,
        fusion=hp.alpha * lf,
        reg=hp.beta * reg,
        total=recon + hp.alpha * lf + hp.beta * reg,
    )
    grad = params.zeros_like()
    _side_backward(params.a, acts_a, batch.x_a, batch.obs_a, hp.gamma, lat_a, grad.a)
    _side_backward(params.b, acts_b, batch.x_b, batch.obs_b, hp.gamma, lat_b, grad.b)
    for sp, gp in ((params.a, grad.a), (params.b, grad.b)):
        for W, gW in zip(sp.enc_W + sp.dec_W, gp.enc_W + gp.dec_W):
            gW += 2.0 * hp.beta * W
    return breakdown, grad


def total_loss(batch: Batch, params: AutoencoderParams, hp: HyperParams) -> LossBreakdown:
    if len(batch) == 0:
        raise InputError("batch is empty")
    k = len(params.a.enc_W)
    acts_a = _forward(batch.x_a, params.a)
    acts_b = _forward(batch.x_b, params.b)
    recon = reconstruction_loss(batch.x_a, acts_a[-1], hp.gamma, batch.obs_a) + reconstruction_loss(
        batch.x_b, acts_b[-1], hp.gamma, batch.obs_b
    )
    lf = fusion_loss(acts_a[k][batch.pair_a], acts_b[k][batch.pair_b], batch.labels, hp.margin)
    reg = regularizer(params)
    return LossBreakdown(recon, hp.alpha * lf, hp.beta * reg, recon + hp.alpha * lf + hp.beta * reg)


def gradients(batch: Batch, params: AutoencoderParams, hp: HyperParams) -> AutoencoderParams:
    return loss_and_gradients(batch, params, hp)[1]


# -- training ----------------------------------------------------------------


@dataclass(frozen=True)
class SideFeatures:
    """Feature rows of one library, with the movie id of each row."""

    ids: tuple[str, ...]
    X: np.ndarray
    observed: np.ndarray
    row: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "row", {m: i for i, m in enumerate(self.ids)})
        if self.X.shape != self.observed.shape or self.X.shape[0] != len(self.ids):
            raise DimensionMismatchError("feature matrix, mask and ids disagree in shape")

    @property
    def dim(self) -> int:
        return self.X.shape[1]


@dataclass
class TrainReport:
    recon: list[float] = field(default_factory=list)
    fusion: list[float] = field(default_factory=list)
    reg: list[float] = field(default_factory=list)
    total: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    first_epoch: int = 0

    def __len__(self):
        return len(self.total)

    def append(self, b: LossBreakdown, seconds: float) -> None:
        self.recon.append(b.recon)
        self.fusion.append(b.fusion)
        self.reg.append(b.reg)
        self.total.append(b.total)
        self.seconds.append(seconds)

    def rows(self):
        for i in range(len(self)):
            yield self.first_epoch + i + 1, self.recon[i], self.fusion[i], self.reg[i], self.total[i]

    def to_csv(self, path: str | Path) -> None:
        lines = ["epoch,L_e,alpha_L_f,beta_L_reg,L"]
        lines += [",".join([str(e)] + [repr(v) for v in vals]) for e, *vals in self.rows()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _pair_rows(feats_a: SideFeatures, feats_b: SideFeatures, pairs: Sequence[LabeledPair]):
    try:
        ra = np.array([feats_a.row[p.id_a] for p in pairs], dtype=int)
        rb = np.array([feats_b.row[p.id_b] for p in pairs], dtype=int)
    except KeyError as exc:
        raise InputError(f"labelled pair references a movie without features: {exc}") from None
    labels = np.array([p.label for p in pairs], dtype=float)
    return ra, rb, labels


def train(
    feats_a: SideFeatures,
    feats_b: SideFeatures,
    pairs: Sequence[LabeledPair],
    hp: HyperParams,
    params: AutoencoderParams | None = None,
    start_epoch: int = 0,
) -> tuple[AutoencoderParams, TrainReport]:
    """Minibatch SGD over the labelled pairs.

    The shuffle of epoch ``e`` is drawn from a generator seeded with
    ``(hp.seed, e)``, so resuming from a checkpoint at ``start_epoch``
    reproduces an uninterrupted run exactly.
    """
    if not pairs:
        raise InputError("no labelled pairs to train on")
    ra, rb, labels = _pair_rows(feats_a, feats_b, pairs)
    if params is None:
        params = init_params(feats_a.dim, feats_b.dim, hp)
    else:
        params = params.copy()
        if params.a.input_dim != feats_a.dim or params.b.input_dim != feats_b.dim:
            raise DimensionMismatchError("parameters do not match feature dimensions")
    report = TrainReport(first_epoch=start_epoch)
    last = None
    arrays = params.arrays()
    # overflow is caught by the divergence guard below, not reported as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(start_epoch, start_epoch + hp.epochs):
            t0 = time.perf_counter()
            order = np.random.default_rng((hp.seed, epoch)).permutation(len(labels))
            acc = np.zeros(4)
            for lo in range(0, len(order), hp.batch_size):
                idx = order[lo : lo + hp.batch_size]
                batch = make_batch(feats_a.X, feats_a.observed, feats_b.X, feats_b.observed, ra[idx], rb[idx], labels[idx])
                loss, grad = loss_and_gradients(batch, params, hp)
                if not loss.finite():
                    raise DivergenceError(epoch + 1, last)
                acc += (loss.recon, loss.fusion, loss.reg, loss.total)
                for p, g in zip(arrays, grad.arrays()):
                    p -= hp.learning_rate * g
                if not all(np.all(np.isfinite(p)) for p in arrays):
                    raise DivergenceError(epoch + 1, last)
            summary = LossBreakdown(*acc)
            if not summary.finite():
                raise DivergenceError(epoch + 1, last)
            last = summary
            report.append(summary, time.perf_counter() - t0)
    return params, report


# -- checkpoints -------------------------------------------------------------


def save_checkpoint(path: str | Path, params: AutoencoderParams, hp: HyperParams, epochs_completed: int, **extra) -> None:
    obj = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "hp": hp.to_dict(),
        "epochs_completed": int(epochs_completed),
        "layer_shapes": {s: [list(W.shape) for W in params.side(s).enc_W + params.side(s).dec_W] for s in SIDES},
        "params": params.to_json(),
        **extra,
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> dict:
    """Parse and validate a checkpoint; returns a dict with ``params`` and ``hp`` decoded."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read checkpoint {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"checkpoint {path} is not valid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise InputError("checkpoint must be a JSON object")
    if obj.get("format") != CHECKPOINT_FORMAT:
        raise InputError("checkpoint field 'format' is missing or wrong")
    if obj.get("version") != CHECKPOINT_VERSION:
        raise InputError("checkpoint field 'version' is unsupported")
    for key in ("hp", "params", "epochs_completed"):
        if key not in obj:
            raise InputError(f"checkpoint field {key!r} is missing")
    try:
        hp = HyperParams.from_mapping(obj["hp"])
    except ConfigError as exc:
        raise InputError(f"checkpoint field 'hp' is invalid: {exc}") from None
    params = AutoencoderParams.from_json(obj["params"])
    if params.latent_dim != hp.latent_dim:
        raise InputError("checkpoint field 'hp.layer_dims' disagrees with stored weights")
    out = dict(obj)
    out["hp"] = hp
    out["params"] = params
    return out
