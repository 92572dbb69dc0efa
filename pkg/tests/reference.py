"""Independent brute-force oracles for the test suite.

Everything here is written against plain Python floats and ``math`` so
it shares no code path with the package's kernels. Deliberately slow and
obvious: these are the ground truth the fast implementations are checked
against.
"""

import math

SQRT2 = math.sqrt(2.0)


def similarity_ref(p, q, eps_norm=1e-12):
    acc = 0.0
    for a, b in zip(p, q):
        acc += (a - b) * (a - b)
    return SQRT2 - math.sqrt(acc + eps_norm * eps_norm)


def pair_loss_ref(probs, kappa, pseudo, variant, eps_norm=1e-12):
    """All-pairs loss by direct enumeration of i < j."""
    n = len(probs)
    sep_sum, sep_count = 0.0, 0
    att_sum, att_count = 0.0, 0
    for i in range(n):
        for j in range(i + 1, n):
            s = similarity_ref(probs[i], probs[j], eps_norm)
            w = kappa[i] * kappa[j]
            if pseudo[i] != pseudo[j]:
                sep_sum += w * s
                sep_count += 1
            else:
                att_sum += w * (SQRT2 - s)
                att_count += 1
    loss = 0.0
    if variant in ("separate", "both") and sep_count:
        loss += sep_sum / sep_count
    if variant in ("attract", "both") and att_count:
        loss += att_sum / att_count
    return loss


def minibatch_loss_ref(probs, kappa, pseudo, perm, variant, eps_norm=1e-12):
    """Sampled-pair loss by direct enumeration of (i, perm[i])."""
    n = len(probs)
    sep_sum, sep_count = 0.0, 0
    att_sum, att_count = 0.0, 0
    for i in range(n):
        j = perm[i]
        s = similarity_ref(probs[i], probs[j], eps_norm)
        w = kappa[i] * kappa[j]
        if pseudo[i] != pseudo[j]:
            sep_sum += w * s
            sep_count += 1
        else:
            att_sum += w * (SQRT2 - s)
            att_count += 1
    loss = 0.0
    if variant in ("separate", "both") and sep_count:
        loss += sep_sum / sep_count
    if variant in ("attract", "both") and att_count:
        loss += att_sum / att_count
    return loss


def softmax_ref(logits):
    m = max(logits)
    exps = [math.exp(z - m) for z in logits]
    total = sum(exps)
    return [e / total for e in exps]


def mlp_forward_ref(x, w1, b1, w2, b2):
    """Straight-line matrix arithmetic for the one-hidden-layer net."""
    hidden = []
    for row, bias in zip(w1, b1):
        acc = bias
        for wij, xj in zip(row, x):
            acc += wij * xj
        hidden.append(math.tanh(acc))
    out = []
    for row, bias in zip(w2, b2):
        acc = bias
        for wij, hj in zip(row, hidden):
            acc += wij * hj
        out.append(acc)
    return out


def central_difference_grads(loss_fn, params_arrays, step=1e-5):
    """Central finite differences of a scalar loss over a list of arrays."""
    grads = []
    for arr in params_arrays:
        g = arr.copy()
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.shape[0]):
            orig = flat[k]
            flat[k] = orig + step
            up = loss_fn()
            flat[k] = orig - step
            down = loss_fn()
            flat[k] = orig
            gflat[k] = (up - down) / (2.0 * step)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor=1e-5):
    """Elementwise |a - n| / max(|a|, |n|, floor), maximized.

    The floor reflects central-difference resolution: entries below it
    are compared absolutely at floor scale, since FD noise (~1e-10)
    makes smaller relative comparisons meaningless.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        va = a.reshape(-1)
        vn = n.reshape(-1)
        for x, y in zip(va, vn):
            denom = max(abs(x), abs(y), floor)
            worst = max(worst, abs(x - y) / denom)
    return worst
