"""Hot-kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback
is used otherwise. ``TRANSBOOST_KERNELS=python|cython`` forces a choice
(``cython`` raises if the extension was not built). Both backends agree
numerically to float64 roundoff; a rerun on the same install always
selects the same backend, which keeps run outputs byte-stable.
"""

import os

import numpy as np

from . import pykernels

_choice = os.environ.get("TRANSBOOST_KERNELS", "auto").strip().lower()
if _choice in ("python", "py"):
    _impl = pykernels
elif _choice in ("cython", "c", "compiled"):
    from . import _ckernels as _impl
elif _choice in ("auto", ""):
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = pykernels
else:
    raise ValueError(f"unknown TRANSBOOST_KERNELS value: {_choice!r}")

BACKEND = "python" if _impl is pykernels else "cython"

SQRT2 = pykernels.SQRT2
VARIANT_SEPARATE = pykernels.VARIANT_SEPARATE
VARIANT_ATTRACT = pykernels.VARIANT_ATTRACT
VARIANT_BOTH = pykernels.VARIANT_BOTH


def _mat(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _vec(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _ivec(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def softmax_rows(logits):
    return _impl.softmax_rows(_mat(logits))


def ce_loss_grad(probs, labels, eps_log):
    return _impl.ce_loss_grad(_mat(probs), _ivec(labels), float(eps_log))


def entropy_loss_grad(probs, eps_log):
    return _impl.entropy_loss_grad(_mat(probs), float(eps_log))


def pair_loss_grad(probs, kappa, pseudo, perm, variant, eps_norm):
    return _impl.pair_loss_grad(
        _mat(probs), _vec(kappa), _ivec(pseudo), _ivec(perm), int(variant), float(eps_norm)
    )


def pair_loss_exact(probs, kappa, pseudo, variant, eps_norm):
    return _impl.pair_loss_exact(
        _mat(probs), _vec(kappa), _ivec(pseudo), int(variant), float(eps_norm)
    )


def dprobs_to_dlogits(probs, dprobs):
    return _impl.dprobs_to_dlogits(_mat(probs), _mat(dprobs))
