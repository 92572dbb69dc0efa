"""Backend parity: the compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest

from conftest import random_probs
from transboost.kernels import pykernels

try:
    from transboost.kernels import _ckernels

    BACKENDS = [("python", pykernels), ("cython", _ckernels)]
except ImportError:
    BACKENDS = [("python", pykernels)]

needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")


def _case(seed, n=17, c=6):
    rng = np.random.default_rng(seed)
    probs = np.ascontiguousarray(random_probs(rng, n, c))
    kappa = np.ascontiguousarray(rng.uniform(0.2, 1.0, size=n))
    pseudo = np.ascontiguousarray(rng.integers(0, c, size=n))
    perm = np.ascontiguousarray(rng.permutation(n).astype(np.int64))
    logits = np.ascontiguousarray(rng.normal(size=(n, c)) * 3.0)
    labels = np.ascontiguousarray(rng.integers(0, c, size=n))
    return probs, kappa, pseudo, perm, logits, labels


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_softmax_rows_valid(name, impl):
    _, _, _, _, logits, _ = _case(0)
    p = impl.softmax_rows(logits)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(p >= 0.0)


@needs_both
@pytest.mark.parametrize("seed", range(10))
def test_backends_agree(seed):
    probs, kappa, pseudo, perm, logits, labels = _case(seed)

    np.testing.assert_allclose(
        pykernels.softmax_rows(logits), _ckernels.softmax_rows(logits), rtol=1e-13, atol=1e-15
    )

    ce_py, dz_py = pykernels.ce_loss_grad(probs, labels, 1e-12)
    ce_c, dz_c = _ckernels.ce_loss_grad(probs, labels, 1e-12)
    assert ce_py == pytest.approx(ce_c, rel=1e-13)
    np.testing.assert_allclose(dz_py, dz_c, rtol=1e-12, atol=1e-15)

    h_py, dp_py = pykernels.entropy_loss_grad(probs, 1e-12)
    h_c, dp_c = _ckernels.entropy_loss_grad(probs, 1e-12)
    assert h_py == pytest.approx(h_c, rel=1e-13)
    np.testing.assert_allclose(dp_py, dp_c, rtol=1e-12, atol=1e-15)

    for variant in (0, 1, 2):
        l_py, g_py = pykernels.pair_loss_grad(probs, kappa, pseudo, perm, variant, 1e-12)
        l_c, g_c = _ckernels.pair_loss_grad(probs, kappa, pseudo, perm, variant, 1e-12)
        assert l_py == pytest.approx(l_c, rel=1e-12, abs=1e-15)
        np.testing.assert_allclose(g_py, g_c, rtol=1e-11, atol=1e-14)

        e_py = pykernels.pair_loss_exact(probs, kappa, pseudo, variant, 1e-12)
        e_c = _ckernels.pair_loss_exact(probs, kappa, pseudo, variant, 1e-12)
        assert e_py == pytest.approx(e_c, rel=1e-12, abs=1e-15)

    dp = np.ascontiguousarray(np.random.default_rng(seed + 1).normal(size=probs.shape))
    np.testing.assert_allclose(
        pykernels.dprobs_to_dlogits(probs, dp),
        _ckernels.dprobs_to_dlogits(probs, dp),
        rtol=1e-12,
        atol=1e-15,
    )


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_pair_loss_identity_perm_is_zero(name, impl):
    probs, kappa, pseudo, _, _, _ = _case(3)
    perm = np.arange(len(kappa), dtype=np.int64)
    loss, grads = impl.pair_loss_grad(probs, kappa, pseudo, perm, 0, 1e-12)
    assert loss == 0.0
    assert np.all(grads == 0.0)


@pytest.mark.parametrize("name,impl", BACKENDS)
def test_pair_grad_matches_finite_differences(name, impl):
    probs, kappa, pseudo, perm, _, _ = _case(5, n=9, c=4)
    for variant in (0, 1, 2):
        _, grads = impl.pair_loss_grad(probs, kappa, pseudo, perm, variant, 1e-9)
        step = 1e-7
        fd = np.zeros_like(probs)
        for i in range(probs.shape[0]):
            for j in range(probs.shape[1]):
                probs[i, j] += step
                up, _ = impl.pair_loss_grad(probs, kappa, pseudo, perm, variant, 1e-9)
                probs[i, j] -= 2 * step
                down, _ = impl.pair_loss_grad(probs, kappa, pseudo, perm, variant, 1e-9)
                probs[i, j] += step
                fd[i, j] = (up - down) / (2 * step)
        np.testing.assert_allclose(grads, fd, rtol=1e-5, atol=1e-7)
