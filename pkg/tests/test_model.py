import json
import math

import numpy as np
import pytest

from conftest import random_probs
from reference import central_difference_grads, max_relative_error, mlp_forward_ref, softmax_ref
from transboost.model import (
    MinibatchObjective,
    Parameters,
    cross_entropy,
    forward,
    grad,
    init_params,
    load_checkpoint,
    loss_and_grad,
    predict,
    probs_batch,
    save_checkpoint,
    softmax,
)
from transboost.trainer import build_snapshot
from transboost.transloss import TransLossConfig


class TestForward:
    def test_zero_map(self):
        p = Parameters("linear", (np.zeros((3, 4)), np.zeros(3)))
        np.testing.assert_array_equal(forward(p, np.ones(4)), np.zeros(3))

    def test_identity_weights(self):
        p = Parameters("linear", (np.eye(4), np.zeros(4)))
        e1 = np.zeros(4)
        e1[0] = 1.0
        np.testing.assert_array_equal(forward(p, e1), e1)

    def test_mlp_matches_matrix_oracle(self, mlp_params, rng):
        x = rng.normal(size=4)
        w1, b1, w2, b2 = mlp_params.weights
        expected = mlp_forward_ref(x.tolist(), w1.tolist(), b1.tolist(), w2.tolist(), b2.tolist())
        np.testing.assert_allclose(forward(mlp_params, x), expected, rtol=1e-12)

    def test_dimension_mismatch_raises(self, linear_params):
        with pytest.raises(ValueError):
            forward(linear_params, np.ones(7))

    def test_deterministic(self, mlp_params, rng):
        x = rng.normal(size=4)
        np.testing.assert_array_equal(forward(mlp_params, x), forward(mlp_params, x))


class TestSoftmax:
    def test_symmetric_pair(self):
        np.testing.assert_allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])

    def test_large_logits_stable(self):
        np.testing.assert_allclose(softmax(np.array([1000.0, 1000.0])), [0.5, 0.5])

    def test_matches_direct_arithmetic(self):
        e = math.e
        np.testing.assert_allclose(
            softmax(np.array([1.0, 0.0])), [e / (e + 1.0), 1.0 / (e + 1.0)], rtol=1e-15
        )

    def test_valid_probability_vector(self, rng):
        for _ in range(200):
            c = int(rng.integers(2, 12))
            p = softmax(rng.normal(size=c) * 10.0)
            assert np.all(p >= 0.0)
            assert abs(p.sum() - 1.0) < 1e-9

    def test_matches_reference(self, rng):
        z = rng.normal(size=6) * 5.0
        np.testing.assert_allclose(softmax(z), softmax_ref(z.tolist()), rtol=1e-12)


class TestCrossEntropy:
    def test_one_hot_correct_is_zero(self):
        assert cross_entropy(np.array([0.0, 1.0, 0.0]), 1) == pytest.approx(0.0, abs=1e-11)

    def test_uniform_four_classes(self):
        p = np.full(4, 0.25)
        assert cross_entropy(p, 2) == pytest.approx(math.log(4.0), rel=1e-9)

    def test_zero_probability_stays_finite(self):
        val = cross_entropy(np.array([1.0, 0.0]), 1)
        assert val == pytest.approx(-math.log(1e-12))
        assert math.isfinite(val)

    def test_out_of_range_label(self):
        with pytest.raises(IndexError):
            cross_entropy(np.array([0.5, 0.5]), 2)
        with pytest.raises(IndexError):
            cross_entropy(np.array([0.5, 0.5]), -1)


class TestPredict:
    def test_argmax(self):
        p = Parameters("linear", (np.eye(3), np.array([3.0, 1.0, 2.0])))
        assert predict(p, np.zeros(3)) == 0

    def test_tie_breaks_low_index(self):
        p = Parameters("linear", (np.zeros((3, 2)), np.array([2.0, 2.0, 1.0])))
        assert predict(p, np.ones(2)) == 0

    def test_negative_logits(self):
        p = Parameters("linear", (np.zeros((3, 2)), np.array([-1.0, 0.0, 0.5])))
        assert predict(p, np.ones(2)) == 2

    def test_shift_invariance(self, rng):
        w = rng.normal(size=(5, 3))
        b = rng.normal(size=5)
        x = rng.normal(size=3)
        before = predict(Parameters("linear", (w, b)), x)
        after = predict(Parameters("linear", (w, b + 17.5)), x)
        assert before == after


def _objective_from_arrays(arrays, arch, data, cfg, term="pair"):
    params = Parameters(arch, tuple(arrays))
    xl, yl, xu, pseudo, kappa, perm = data
    objective = MinibatchObjective(
        labeled_x=xl,
        labeled_y=yl,
        unlabeled_x=xu,
        pseudo=pseudo,
        kappa=kappa,
        perm=perm,
        loss_cfg=cfg,
        unlabeled_term=term,
    )
    return params, objective


def _random_case(rng, arch):
    d, c, h = 4, 3, 5
    params = init_params(arch, d, c, hidden=h, seed=int(rng.integers(1 << 30)))
    arrays = [w.copy() for w in params.weights]
    xl = rng.normal(size=(6, d))
    yl = rng.integers(0, c, size=6)
    xu = rng.normal(size=(8, d))
    theta0 = init_params(arch, d, c, hidden=h, seed=int(rng.integers(1 << 30)))
    snap = build_snapshot(theta0, xu)
    perm = rng.permutation(8)
    return arrays, (xl, yl, xu, snap.pseudo_labels, snap.confidences, perm)


class TestGrad:
    def test_single_example_closed_form(self):
        # zero linear weights: softmax is uniform, CE gradient of b is p - onehot
        params = Parameters("linear", (np.zeros((2, 3)), np.zeros(2)))
        objective = MinibatchObjective(
            labeled_x=np.array([[1.0, 2.0, 3.0]]),
            labeled_y=np.array([1]),
            loss_cfg=TransLossConfig(lam=0.0),
        )
        g = grad(params, objective)
        np.testing.assert_allclose(g[1], np.array([0.5, -0.5]), atol=1e-9)
        np.testing.assert_allclose(g[0], np.outer([0.5, -0.5], [1.0, 2.0, 3.0]), atol=1e-9)

    def test_lambda_zero_equals_pure_ce(self, rng):
        arrays, data = _random_case(rng, "linear")
        params, combined = _objective_from_arrays(
            arrays, "linear", data, TransLossConfig(lam=0.0)
        )
        ce_only = MinibatchObjective(
            labeled_x=data[0], labeled_y=data[1], loss_cfg=TransLossConfig(lam=0.0)
        )
        for a, b in zip(grad(params, combined), grad(params, ce_only)):
            np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("arch", ["linear", "mlp1"])
    @pytest.mark.parametrize(
        "kind", ["ce", "pair-separate", "pair-attract", "pair-both", "combined", "entropy"]
    )
    def test_matches_finite_differences(self, arch, kind, rng):
        arrays, data = _random_case(rng, arch)
        if kind == "ce":
            cfg, term, labeled = TransLossConfig(lam=0.0), "pair", True
        elif kind == "combined":
            cfg, term, labeled = TransLossConfig(lam=2.0), "pair", True
        elif kind == "entropy":
            cfg, term, labeled = TransLossConfig(lam=1.5), "entropy", True
        else:
            cfg = TransLossConfig(lam=1.0, variant=kind.split("-", 1)[1])
            term, labeled = "pair", False
        if not labeled:
            data = (None, None) + data[2:]

        params, objective = _objective_from_arrays(arrays, arch, data, cfg, term)
        analytic = grad(params, objective)

        def loss_fn():
            p, o = _objective_from_arrays(arrays, arch, data, cfg, term)
            return loss_and_grad(p, o)[0]

        numeric = central_difference_grads(loss_fn, arrays, step=1e-5)
        assert max_relative_error(analytic, numeric) < 1e-4

    def test_nonfinite_parameter_rejected(self):
        with pytest.raises(ValueError):
            Parameters("linear", (np.array([[np.inf, 0.0]]), np.zeros(1)))


class TestCheckpoint:
    def test_round_trip_bit_faithful(self, tmp_path, mlp_params):
        path = tmp_path / "ckpt.json"
        save_checkpoint(mlp_params, path, seed=9, tag="unit")
        loaded, meta = load_checkpoint(path)
        assert loaded.arch == "mlp1"
        assert meta["seed"] == 9 and meta["tag"] == "unit"
        for a, b in zip(loaded.weights, mlp_params.weights):
            np.testing.assert_array_equal(a, b)

    def test_same_params_same_bytes(self, tmp_path, linear_params):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_checkpoint(linear_params, p1, seed=1, tag="t")
        save_checkpoint(linear_params, p2, seed=1, tag="t")
        assert p1.read_bytes() == p2.read_bytes()

    def test_schema_fields(self, tmp_path, linear_params):
        path = tmp_path / "c.json"
        save_checkpoint(linear_params, path, seed=3, tag="x")
        doc = json.loads(path.read_text())
        assert set(doc) == {"arch", "dims", "weights", "seed", "tag"}
        assert doc["dims"] == {"d": 4, "h": None, "c": 3}


def test_probs_batch_rows_are_prob_vectors(mlp_params, rng):
    P = probs_batch(mlp_params, rng.normal(size=(10, 4)))
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(P >= 0.0)
