"""Pairwise transductive loss algebra.

The loss looks at pairs of test instances. For each pair it multiplies
three ingredients, all computed from probability vectors:

* similarity ``S(p, q) = sqrt(2) - ||p - q||_2`` (smoothed with a tiny
  eps inside the root so the gradient exists at p = q); bounded to
  [0, sqrt(2)] for probability vectors,
* a 0/1 selection from frozen pretrained pseudo-labels (1 iff the two
  instances were predicted to different classes),
* a confidence weight kappa(x) = max softmax entry of the pretrained
  model, one per instance.

The *separation* loss averages ``kappa_i kappa_j S`` over selected pairs,
so minimizing it pushes apart the predictions of pairs believed to be in
different classes. The *attraction* variant swaps ``S -> sqrt(2) - S``
and the selection to its complement (pull together pairs believed alike);
*both* sums the two, each with its own pair-count normalizer. Any term
whose pair count is zero contributes zero.

The exact loss enumerates all i < j pairs (quadratic). The minibatch
estimator pairs each batch element i with perm[i] for one random
permutation and normalizes by the number of selected sampled pairs, with
the same zero-denominator guard.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import kernels

SQRT2 = math.sqrt(2.0)

# Guard inside every log so a zero probability stays finite.
EPS_LOG = 1e-12

VARIANTS = ("separate", "attract", "both")

_VARIANT_CODES = {
    "separate": kernels.VARIANT_SEPARATE,
    "attract": kernels.VARIANT_ATTRACT,
    "both": kernels.VARIANT_BOTH,
}


@dataclass(frozen=True)
class TransLossConfig:
    """Transductive loss knobs: weight lam >= 0, variant, norm smoothing."""

    lam: float = 2.0
    variant: str = "separate"
    eps_norm: float = 1e-12

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("lam must be nonnegative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.eps_norm <= 0.0:
            raise ValueError("eps_norm must be positive")

    @property
    def variant_code(self):
        return _VARIANT_CODES[self.variant]

    def with_lam(self, lam):
        return replace(self, lam=float(lam))

    def with_variant(self, variant):
        return replace(self, variant=variant)


@dataclass(frozen=True)
class Snapshot:
    """Frozen pretrained-model view of the test set.

    Holds one pseudo-label and one confidence per test instance, computed
    once from the pretrained weights and never updated during fine-tuning.
    """

    pseudo_labels: np.ndarray
    confidences: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        pl = np.asarray(self.pseudo_labels, dtype=np.int64).copy()
        cf = np.asarray(self.confidences, dtype=np.float64).copy()
        if pl.ndim != 1 or cf.ndim != 1 or pl.shape != cf.shape:
            raise ValueError("pseudo_labels and confidences must be equal-length vectors")
        if np.any(pl < 0):
            raise ValueError("pseudo-labels must be nonnegative class indices")
        if np.any(cf <= 0.0) or np.any(cf > 1.0):
            raise ValueError("confidences must lie in (0, 1]")
        pl.flags.writeable = False
        cf.flags.writeable = False
        object.__setattr__(self, "pseudo_labels", pl)
        object.__setattr__(self, "confidences", cf)

    def __len__(self):
        return self.pseudo_labels.shape[0]

    def take(self, indices):
        """Snapshot restricted to a batch of instance indices."""
        idx = np.asarray(indices, dtype=np.int64)
        return Snapshot(self.pseudo_labels[idx], self.confidences[idx], self.source_tag)


@dataclass(frozen=True)
class PairTerm:
    """One summand of the exact pairwise loss (i < j)."""

    i: int
    j: int
    selected: int
    weight: float
    similarity: float


def similarity(p_i, p_j, eps_norm=1e-12):
    """sqrt(2) minus the smoothed L2 distance of two probability vectors."""
    p_i = np.asarray(p_i, dtype=np.float64)
    p_j = np.asarray(p_j, dtype=np.float64)
    if p_i.shape != p_j.shape:
        raise ValueError(f"length mismatch: {p_i.shape} vs {p_j.shape}")
    d = p_i - p_j
    return SQRT2 - math.sqrt(float(d @ d) + eps_norm * eps_norm)


def delta(snapshot, i, j):
    """1 iff instances i and j carry different pseudo-labels."""
    n = len(snapshot)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"pair ({i}, {j}) out of range for {n} instances")
    return int(snapshot.pseudo_labels[i] != snapshot.pseudo_labels[j])


def kappa(probs):
    """Softmax-response confidence: the largest class probability."""
    return float(np.max(np.asarray(probs, dtype=np.float64)))


def _as_prob_matrix(probs):
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError("probs must be a [U, C] matrix of probability rows")
    return p


def pair_terms(probs, snapshot, config):
    """Yield every i < j PairTerm (selection per the config's variant)."""
    p = _as_prob_matrix(probs)
    attract = config.variant == "attract"
    for i in range(p.shape[0]):
        for j in range(i + 1, p.shape[0]):
            sel = delta(snapshot, i, j)
            if attract:
                sel = 1 - sel
            yield PairTerm(
                i=i,
                j=j,
                selected=sel,
                weight=float(snapshot.confidences[i] * snapshot.confidences[j]),
                similarity=similarity(p[i], p[j], config.eps_norm),
            )


def exact_loss(probs, snapshot, config):
    """Full pairwise loss over all instances; 0 (with a warning) if U < 2."""
    p = _as_prob_matrix(probs)
    if len(snapshot) != p.shape[0]:
        raise ValueError("probs and snapshot disagree in length")
    if p.shape[0] < 2:
        warnings.warn("exact pairwise loss needs at least 2 instances; returning 0")
        return 0.0
    return float(
        kernels.pair_loss_exact(
            p, snapshot.confidences, snapshot.pseudo_labels, config.variant_code, config.eps_norm
        )
    )


def _check_permutation(perm, n):
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError(f"perm is not a permutation of 0..{n - 1}")
    return perm


def minibatch_loss(probs, snapshot_view, perm, config):
    """Sampled-pair estimate of the loss over one batch.

    Pairs element i with perm[i]; normalizes by the number of selected
    sampled pairs and returns 0 when none is selected. Fixed points of
    the permutation pair an instance with itself; the separation term
    drops them through the selection.
    """
    p = _as_prob_matrix(probs)
    if len(snapshot_view) != p.shape[0]:
        raise ValueError("probs and snapshot view disagree in length")
    perm = _check_permutation(perm, p.shape[0])
    loss, _ = kernels.pair_loss_grad(
        p,
        snapshot_view.confidences,
        snapshot_view.pseudo_labels,
        perm,
        config.variant_code,
        config.eps_norm,
    )
    return float(loss)


def combined_objective(labeled_probs, labels, unlabeled_probs, snapshot_view, perm, config):
    """Mean eps-guarded cross-entropy plus lam times the minibatch loss."""
    lp = _as_prob_matrix(labeled_probs)
    if lp.shape[0] < 1:
        raise ValueError("labeled batch must be nonempty")
    y = np.asarray(labels, dtype=np.int64)
    ce = float(-np.log(lp[np.arange(lp.shape[0]), y] + EPS_LOG).mean())
    return ce + config.lam * minibatch_loss(unlabeled_probs, snapshot_view, perm, config)
