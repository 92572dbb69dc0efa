# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of ``pykernels``.

Same contracts, tight C loops, sequential (index-order) reductions so a
given input always reduces in the same order. No fast-math: IEEE
semantics are part of the determinism contract.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

SQRT2 = sqrt(2.0)

VARIANT_SEPARATE = 0
VARIANT_ATTRACT = 1
VARIANT_BOTH = 2

cdef double _SQRT2 = sqrt(2.0)


def softmax_rows(const double[:, ::1] logits):
    cdef Py_ssize_t n = logits.shape[0]
    cdef Py_ssize_t c = logits.shape[1]
    out_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(n):
        m = logits[i, 0]
        for j in range(1, c):
            if logits[i, j] > m:
                m = logits[i, j]
        s = 0.0
        for j in range(c):
            out[i, j] = exp(logits[i, j] - m)
            s += out[i, j]
        for j in range(c):
            out[i, j] /= s
    return out_arr


def ce_loss_grad(const double[:, ::1] probs, const cnp.int64_t[::1] labels, double eps_log):
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t c = probs.shape[1]
    dl_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] dl = dl_arr
    cdef Py_ssize_t i, j
    cdef cnp.int64_t y
    cdef double loss = 0.0, p_y, scale, inv_n = 1.0 / n
    for i in range(n):
        y = labels[i]
        p_y = probs[i, y]
        loss += -log(p_y + eps_log)
        scale = p_y / (p_y + eps_log)
        for j in range(c):
            dl[i, j] = probs[i, j] * scale * inv_n
        dl[i, y] -= scale * inv_n
    return loss * inv_n, dl_arr


def entropy_loss_grad(const double[:, ::1] probs, double eps_log):
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t c = probs.shape[1]
    dp_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] dp = dp_arr
    cdef Py_ssize_t i, j
    cdef double loss = 0.0, lp, p, inv_n = 1.0 / n
    for i in range(n):
        for j in range(c):
            p = probs[i, j]
            lp = log(p + eps_log)
            loss += -p * lp
            dp[i, j] = -(lp + p / (p + eps_log)) * inv_n
    return loss * inv_n, dp_arr


def pair_loss_grad(const double[:, ::1] probs, const double[::1] kappa,
                   const cnp.int64_t[::1] pseudo, const cnp.int64_t[::1] perm,
                   int variant, double eps_norm):
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t c = probs.shape[1]
    dp_arr = np.zeros((n, c), dtype=np.float64)
    cdef double[:, ::1] dp = dp_arr
    norms_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] norms = norms_arr
    cdef Py_ssize_t i, j, pi
    cdef double sq, d, w, sep_sum = 0.0, att_sum = 0.0, coef, loss = 0.0
    cdef long sep_count = 0, att_count = 0
    cdef bint want_sep = variant == VARIANT_SEPARATE or variant == VARIANT_BOTH
    cdef bint want_att = variant == VARIANT_ATTRACT or variant == VARIANT_BOTH

    for i in range(n):
        pi = perm[i]
        sq = 0.0
        for j in range(c):
            d = probs[i, j] - probs[pi, j]
            sq += d * d
        norms[i] = sqrt(sq + eps_norm * eps_norm)
        w = kappa[i] * kappa[pi]
        if pseudo[i] != pseudo[pi]:
            sep_count += 1
            sep_sum += w * (_SQRT2 - norms[i])
        else:
            att_count += 1
            att_sum += w * norms[i]

    if want_sep and sep_count > 0:
        loss += sep_sum / sep_count
    if want_att and att_count > 0:
        loss += att_sum / att_count

    for i in range(n):
        pi = perm[i]
        coef = 0.0
        if pseudo[i] != pseudo[pi]:
            if want_sep and sep_count > 0:
                coef = -kappa[i] * kappa[pi] / (sep_count * norms[i])
        else:
            if want_att and att_count > 0:
                coef = kappa[i] * kappa[pi] / (att_count * norms[i])
        if coef != 0.0:
            for j in range(c):
                d = coef * (probs[i, j] - probs[pi, j])
                dp[i, j] += d
                dp[pi, j] -= d
    return loss, dp_arr


def pair_loss_exact(const double[:, ::1] probs, const double[::1] kappa,
                    const cnp.int64_t[::1] pseudo, int variant, double eps_norm):
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t c = probs.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double sq, d, w, nrm
    cdef double sep_sum = 0.0, att_sum = 0.0, loss = 0.0
    cdef long sep_count = 0, att_count = 0
    cdef bint want_sep = variant == VARIANT_SEPARATE or variant == VARIANT_BOTH
    cdef bint want_att = variant == VARIANT_ATTRACT or variant == VARIANT_BOTH

    for i in range(n):
        for j in range(i + 1, n):
            sq = 0.0
            for k in range(c):
                d = probs[i, k] - probs[j, k]
                sq += d * d
            nrm = sqrt(sq + eps_norm * eps_norm)
            w = kappa[i] * kappa[j]
            if pseudo[i] != pseudo[j]:
                sep_count += 1
                sep_sum += w * (_SQRT2 - nrm)
            else:
                att_count += 1
                att_sum += w * nrm

    if want_sep and sep_count > 0:
        loss += sep_sum / sep_count
    if want_att and att_count > 0:
        loss += att_sum / att_count
    return loss


def dprobs_to_dlogits(const double[:, ::1] probs, const double[:, ::1] dprobs):
    cdef Py_ssize_t n = probs.shape[0]
    cdef Py_ssize_t c = probs.shape[1]
    dz_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] dz = dz_arr
    cdef Py_ssize_t i, j
    cdef double inner
    for i in range(n):
        inner = 0.0
        for j in range(c):
            inner += dprobs[i, j] * probs[i, j]
        for j in range(c):
            dz[i, j] = probs[i, j] * (dprobs[i, j] - inner)
    return dz_arr
