"""Reference softmax classifiers with exact analytic gradients.

Two architectures: ``linear`` (W [C,D], b [C]) and ``mlp1`` (one tanh
hidden layer: W1 [H,D], b1 [H], W2 [C,H], b2 [C]). Everything runs at
float64. Gradients are hand-derived reverse mode for exactly the losses
this package optimizes (mean cross-entropy, the sampled-pair
transductive term, mean prediction entropy, and weighted sums of a
labeled and an unlabeled part); parameter updates never need generic
autodiff.

All functions are pure: parameters are immutable, and identical inputs
give bit-identical outputs.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .transloss import EPS_LOG, TransLossConfig

ARCHS = ("linear", "mlp1")


@dataclass(frozen=True)
class Parameters:
    """Immutable weight set for one classifier.

    ``weights`` ordering: linear -> (W, b); mlp1 -> (W1, b1, W2, b2).
    """

    arch: str
    weights: tuple

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ValueError(f"unknown arch {self.arch!r}, expected one of {ARCHS}")
        ws = tuple(np.asarray(w, dtype=np.float64) for w in self.weights)
        expected = 2 if self.arch == "linear" else 4
        if len(ws) != expected:
            raise ValueError(f"{self.arch} needs {expected} weight arrays, got {len(ws)}")
        if self.arch == "linear":
            w, b = ws
            if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[0]:
                raise ValueError("linear weights must be W [C,D], b [C]")
        else:
            w1, b1, w2, b2 = ws
            if (
                w1.ndim != 2
                or b1.shape != (w1.shape[0],)
                or w2.ndim != 2
                or w2.shape[1] != w1.shape[0]
                or b2.shape != (w2.shape[0],)
            ):
                raise ValueError("mlp1 weights must be W1 [H,D], b1 [H], W2 [C,H], b2 [C]")
        for w in ws:
            if not np.all(np.isfinite(w)):
                raise ValueError("parameters must be finite")
        frozen = []
        for w in ws:
            w = w.copy()
            w.flags.writeable = False
            frozen.append(w)
        object.__setattr__(self, "weights", tuple(frozen))

    @property
    def n_features(self):
        return self.weights[0].shape[1]

    @property
    def n_classes(self):
        return self.weights[-1].shape[0]

    @property
    def hidden(self):
        return self.weights[0].shape[0] if self.arch == "mlp1" else None

    def with_weights(self, new_weights):
        return Parameters(self.arch, tuple(new_weights))


# A gradient set mirrors Parameters.weights: one array per weight array.
GradientSet = tuple


def init_params(arch, n_features, n_classes, hidden=None, seed=0):
    """Seeded Glorot-uniform init: U(-a, a) with a = sqrt(6/(fan_in+fan_out)).

    ``seed`` may be an int or a ``numpy.random.SeedSequence``.
    """
    rng = np.random.default_rng(seed)

    def glorot(fan_out, fan_in):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-a, a, size=(fan_out, fan_in))

    if arch == "linear":
        return Parameters(arch, (glorot(n_classes, n_features), np.zeros(n_classes)))
    if arch == "mlp1":
        if hidden is None:
            raise ValueError("mlp1 needs a hidden width")
        return Parameters(
            arch,
            (
                glorot(hidden, n_features),
                np.zeros(hidden),
                glorot(n_classes, hidden),
                np.zeros(n_classes),
            ),
        )
    raise ValueError(f"unknown arch {arch!r}")


def _check_features(params, x, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.n_features:
        raise ValueError(
            f"{name} has width {x.shape[-1]}, model expects {params.n_features}"
        )
    return x


def logits_batch(params, X):
    """Forward pass over a batch, returning (logits, cache for backward)."""
    X = _check_features(params, np.atleast_2d(X), "X")
    if params.arch == "linear":
        w, b = params.weights
        z = X @ w.T + b
        cache = (X,)
    else:
        w1, b1, w2, b2 = params.weights
        a = np.tanh(X @ w1.T + b1)
        z = a @ w2.T + b2
        cache = (X, a)
    if not np.all(np.isfinite(z)):
        raise FloatingPointError("non-finite logits in forward pass")
    return z, cache


def forward(params, x):
    """Logits for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("forward expects a single feature vector")
    z, _ = logits_batch(params, x[None, :])
    return z[0]


def softmax(logits):
    """Numerically stable softmax of a logit vector."""
    z = np.asarray(logits, dtype=np.float64)
    return kernels.softmax_rows(z[None, :])[0]


def probs_batch(params, X):
    z, _ = logits_batch(params, X)
    return kernels.softmax_rows(z)


def cross_entropy(p, y):
    """-log(p_y + eps) with the eps guard keeping p_y = 0 finite."""
    p = np.asarray(p, dtype=np.float64)
    y = int(y)
    if y < 0 or y >= p.shape[0]:
        raise IndexError(f"class index {y} out of range for {p.shape[0]} classes")
    return float(-np.log(p[y] + EPS_LOG))


def predict(params, x):
    """Argmax class; ties go to the lowest index."""
    return int(np.argmax(forward(params, x)))


def predict_batch(params, X):
    z, _ = logits_batch(params, X)
    return np.argmax(z, axis=1)


@dataclass(frozen=True)
class MinibatchObjective:
    """One optimization step's loss: mean CE and/or a weighted unlabeled term.

    The unlabeled term is either the sampled-pair transductive loss
    (``unlabeled_term="pair"``; needs pseudo/kappa/perm, all treated as
    constants) or mean prediction entropy (``"entropy"``). Each part is
    skipped when its batch is None; the unlabeled part is weighted by
    ``loss_cfg.lam``.
    """

    labeled_x: np.ndarray | None = None
    labeled_y: np.ndarray | None = None
    unlabeled_x: np.ndarray | None = None
    pseudo: np.ndarray | None = None
    kappa: np.ndarray | None = None
    perm: np.ndarray | None = None
    loss_cfg: TransLossConfig = field(default_factory=TransLossConfig)
    unlabeled_term: str = "pair"

    def __post_init__(self):
        if self.unlabeled_term not in ("pair", "entropy"):
            raise ValueError(f"unknown unlabeled term {self.unlabeled_term!r}")


def _backward(params, parts):
    """Accumulate parameter gradients from (cache, dlogits) batch parts."""
    grads = [np.zeros_like(w) for w in params.weights]
    for cache, dz in parts:
        if params.arch == "linear":
            (X,) = cache
            grads[0] += dz.T @ X
            grads[1] += dz.sum(axis=0)
        else:
            X, a = cache
            _, _, w2, _ = params.weights
            grads[2] += dz.T @ a
            grads[3] += dz.sum(axis=0)
            da = dz @ w2
            dz1 = (1.0 - a * a) * da
            grads[0] += dz1.T @ X
            grads[1] += dz1.sum(axis=0)
    return tuple(grads)


def loss_parts_and_grad(params, objective):
    """(mean CE, raw unlabeled term, gradient of CE + lam * term).

    The parts are reported unweighted; the gradient is of the full
    weighted sum.
    """
    cfg = objective.loss_cfg
    ce = 0.0
    term = 0.0
    parts = []

    if objective.labeled_x is not None:
        z, cache = logits_batch(params, objective.labeled_x)
        probs = kernels.softmax_rows(z)
        y = np.asarray(objective.labeled_y, dtype=np.int64)
        if y.shape[0] != z.shape[0]:
            raise ValueError("labeled batch and labels disagree in length")
        if np.any(y < 0) or np.any(y >= params.n_classes):
            raise IndexError("label out of class range")
        ce, dz = kernels.ce_loss_grad(probs, y, EPS_LOG)
        parts.append((cache, dz))

    if objective.unlabeled_x is not None and cfg.lam != 0.0:
        z, cache = logits_batch(params, objective.unlabeled_x)
        probs = kernels.softmax_rows(z)
        if objective.unlabeled_term == "pair":
            term, dprobs = kernels.pair_loss_grad(
                probs,
                objective.kappa,
                objective.pseudo,
                objective.perm,
                cfg.variant_code,
                cfg.eps_norm,
            )
        else:
            term, dprobs = kernels.entropy_loss_grad(probs, EPS_LOG)
        dz = kernels.dprobs_to_dlogits(probs, cfg.lam * dprobs)
        parts.append((cache, dz))

    grads = _backward(params, parts)
    loss = ce + cfg.lam * term
    for name, g in zip(("loss", *("grad",) * len(grads)), (loss, *grads)):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite {name} in gradient computation")
    return float(ce), float(term), grads


def loss_and_grad(params, objective):
    """Scalar loss and its exact gradient for one minibatch objective."""
    ce, term, grads = loss_parts_and_grad(params, objective)
    return ce + objective.loss_cfg.lam * term, grads


def grad(params, objective):
    """Exact analytic gradient of the objective w.r.t. every parameter."""
    return loss_and_grad(params, objective)[1]


def save_checkpoint(params, path, seed=0, tag=""):
    """Write the single-document JSON checkpoint (shortest round-trip floats)."""
    doc = {
        "arch": params.arch,
        "dims": {
            "d": params.n_features,
            "h": params.hidden,
            "c": params.n_classes,
        },
        "weights": [w.tolist() for w in params.weights],
        "seed": int(seed),
        "tag": str(tag),
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    os.replace(tmp, path)


def load_checkpoint(path):
    """Read a checkpoint; returns (Parameters, metadata dict)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    params = Parameters(doc["arch"], tuple(np.asarray(w, dtype=np.float64) for w in doc["weights"]))
    meta = {"seed": doc.get("seed", 0), "tag": doc.get("tag", ""), "dims": doc["dims"]}
    return params, meta
