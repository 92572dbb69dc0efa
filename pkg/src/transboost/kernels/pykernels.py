"""NumPy implementations of the hot loss kernels.

This is the always-available backend. A compiled twin lives in
``_ckernels.pyx`` with identical signatures; ``transboost.kernels``
picks one at import time. Keep the two in lockstep: every change here
needs the mirror change there (``tests/test_kernels.py`` cross-checks
them numerically).

Conventions shared by both backends:

* ``probs`` is an (n, C) float64 array of rows summing to 1.
* ``pseudo`` holds int64 class indices frozen from the pretrained model.
* ``variant`` is an int code: 0 separate, 1 attract, 2 both.
* Gradients returned as ``dprobs``/``dlogits`` are of the *mean* loss,
  i.e. already carry every normalizer.
"""

import numpy as np

SQRT2 = np.sqrt(2.0)

VARIANT_SEPARATE = 0
VARIANT_ATTRACT = 1
VARIANT_BOTH = 2


def softmax_rows(logits):
    """Row-wise softmax with max subtraction for overflow safety."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def ce_loss_grad(probs, labels, eps_log):
    """Mean cross-entropy -log(p_y + eps_log) and its gradient w.r.t. logits.

    The gradient is exact for the eps-guarded loss: each row contributes
    (p - onehot_y) * p_y / (p_y + eps_log), divided by the row count.
    """
    n = probs.shape[0]
    p_y = probs[np.arange(n), labels]
    loss = float(-np.log(p_y + eps_log).mean())
    scale = p_y / (p_y + eps_log)
    dlogits = probs * scale[:, None]
    dlogits[np.arange(n), labels] -= scale
    dlogits /= n
    return loss, dlogits


def entropy_loss_grad(probs, eps_log):
    """Mean Shannon entropy (natural log) and its gradient w.r.t. probs."""
    n = probs.shape[0]
    logp = np.log(probs + eps_log)
    loss = float(-(probs * logp).sum() / n)
    dprobs = -(logp + probs / (probs + eps_log)) / n
    return loss, dprobs


def pair_loss_grad(probs, kappa, pseudo, perm, variant, eps_norm):
    """Sampled-pair transductive loss over (i, perm[i]) pairs and its dprobs.

    Separation term: sum_i k_i k_pi d_i S_i / sum_i d_i, zero if no pair is
    selected. Attraction swaps S -> sqrt2 - S and d -> 1 - d with its own
    count and zero guard. Fixed points of ``perm`` are kept; the separation
    term nullifies them through d.
    """
    diff = probs - probs[perm]
    norms = np.sqrt(np.einsum("ij,ij->i", diff, diff) + eps_norm * eps_norm)
    selected = (pseudo != pseudo[perm]).astype(np.float64)
    weights = kappa * kappa[perm]

    loss = 0.0
    coef = np.zeros(len(perm))
    if variant in (VARIANT_SEPARATE, VARIANT_BOTH):
        count = selected.sum()
        if count > 0.0:
            loss += float((weights * selected * (SQRT2 - norms)).sum() / count)
            coef -= weights * selected / (count * norms)
    if variant in (VARIANT_ATTRACT, VARIANT_BOTH):
        inverted = 1.0 - selected
        count = inverted.sum()
        if count > 0.0:
            loss += float((weights * inverted * norms).sum() / count)
            coef += weights * inverted / (count * norms)

    scaled = coef[:, None] * diff
    dprobs = scaled.copy()
    dprobs[perm] -= scaled  # perm is a permutation, so targets are unique
    return loss, dprobs


def pair_loss_exact(probs, kappa, pseudo, variant, eps_norm):
    """Full O(U^2) pairwise transductive loss over all i < j pairs."""
    sq = np.einsum("ij,ij->i", probs, probs)
    gram = probs @ probs.T
    dist_sq = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
    iu, ju = np.triu_indices(probs.shape[0], k=1)
    norms = np.sqrt(dist_sq[iu, ju] + eps_norm * eps_norm)
    selected = (pseudo[iu] != pseudo[ju]).astype(np.float64)
    weights = kappa[iu] * kappa[ju]

    loss = 0.0
    if variant in (VARIANT_SEPARATE, VARIANT_BOTH):
        count = selected.sum()
        if count > 0.0:
            loss += float((weights * selected * (SQRT2 - norms)).sum() / count)
    if variant in (VARIANT_ATTRACT, VARIANT_BOTH):
        inverted = 1.0 - selected
        count = inverted.sum()
        if count > 0.0:
            loss += float((weights * inverted * norms).sum() / count)
    return loss


def dprobs_to_dlogits(probs, dprobs):
    """Apply the softmax Jacobian row-wise: dz = p * (g - <g, p>)."""
    inner = np.einsum("ij,ij->i", dprobs, probs)
    return probs * (dprobs - inner[:, None])
