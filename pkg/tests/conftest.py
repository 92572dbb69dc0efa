import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from transboost.data import gen_blobs
from transboost.model import init_params
from transboost.transloss import Snapshot


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_blobs():
    return gen_blobs(2, 60, 4, center_scale=2.0, noise_sigma=0.8, seed=11)


@pytest.fixture
def linear_params():
    return init_params("linear", 4, 3, seed=5)


@pytest.fixture
def mlp_params():
    return init_params("mlp1", 4, 3, hidden=5, seed=7)


def random_probs(rng, n, c):
    """Random probability rows via exponential normalization."""
    raw = rng.exponential(size=(n, c))
    return raw / raw.sum(axis=1, keepdims=True)


def random_snapshot(rng, n, c):
    return Snapshot(
        pseudo_labels=rng.integers(0, c, size=n),
        confidences=rng.uniform(1.0 / c, 1.0, size=n),
    )
