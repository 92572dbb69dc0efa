"""Training loops: pretraining, transductive fine-tuning, baselines.

Randomness discipline: every loop derives all of its randomness from one
PCG64 generator seeded by the run seed. Streams are split once up front
with ``SeedSequence`` children so the independent draws never interleave:

* pretraining spawns (weight init, batch order),
* fine-tuning spawns (labeled batch order, unlabeled batch order,
  pair permutations).

Same (inputs, config, seed) therefore reproduces bit-identical
parameters. The per-step update is sequential; batch gradients reduce in
index order inside the kernels.
"""

import json
import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .model import (
    MinibatchObjective,
    init_params,
    loss_parts_and_grad,
    probs_batch,
)
from .transloss import Snapshot, TransLossConfig


@dataclass(frozen=True)
class TrainConfig:
    """Loop hyperparameters; defaults follow the standard recipe at desk scale
    (fixed learning rate, Nesterov momentum 0.9, weight decay 1e-4, lam 2,
    equal labeled/unlabeled batch halves)."""

    epochs: int = 120
    labeled_batch: int = 64
    unlabeled_batch: int = 64
    lr: float = 1e-3
    momentum: float = 0.9
    nesterov: bool = True
    weight_decay: float = 1e-4
    seed: int = 0
    loss: TransLossConfig = field(default_factory=TransLossConfig)

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.labeled_batch < 1 or self.unlabeled_batch < 1:
            raise ValueError("batch sizes must be >= 1")
        if self.lr < 0.0 or self.weight_decay < 0.0:
            raise ValueError("lr and weight_decay must be nonnegative")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass
class OptimizerState:
    """Momentum buffers, one per weight array, started at zero."""

    velocity: tuple

    @classmethod
    def zeros_like(cls, params):
        return cls(tuple(np.zeros_like(w) for w in params.weights))


def sgd_step(params, grads, state, config):
    """One SGD step with coupled weight decay and optional Nesterov momentum.

    g <- grad + wd * w; v <- mu * v + g; update = g + mu * v (Nesterov)
    or v (classic); w <- w - lr * update. Returns (new params, new state).
    """
    new_w, new_v = [], []
    for w, g, v in zip(params.weights, grads, state.velocity):
        if g.shape != w.shape:
            raise ValueError("gradient shape does not match parameters")
        g = g + config.weight_decay * w
        v = config.momentum * v + g
        update = g + config.momentum * v if config.nesterov else v
        if not np.all(np.isfinite(update)):
            raise FloatingPointError("non-finite optimizer update")
        new_w.append(w - config.lr * update)
        new_v.append(v)
    return params.with_weights(new_w), OptimizerState(tuple(new_v))


def steps_per_epoch(n_labeled, n_unlabeled, labeled_batch, unlabeled_batch):
    """Cyclical batching runs max(ceil(L/L'), ceil(U/U')) steps per epoch."""
    return max(math.ceil(n_labeled / labeled_batch), math.ceil(n_unlabeled / unlabeled_batch))


def _chunk_stream(n, batch, rng):
    """Endless index batches: shuffled pass over 0..n-1, reshuffled per wrap."""
    while True:
        order = rng.permutation(n)
        for start in range(0, n, batch):
            yield order[start : start + batch]


def cyclical_batches(n_labeled, n_unlabeled, labeled_batch, unlabeled_batch, seed):
    """Endless stream of (labeled indices, unlabeled indices) batch pairs.

    Each side walks its own shuffled pass and reshuffles when it wraps, so
    over one epoch of ``steps_per_epoch`` steps the slower-wrapping side
    visits every element exactly once. ``seed`` may be an int or a
    ``SeedSequence``.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    labeled_ss, unlabeled_ss = ss.spawn(2)
    labeled = _chunk_stream(n_labeled, min(labeled_batch, n_labeled), np.random.default_rng(labeled_ss))
    unlabeled = _chunk_stream(n_unlabeled, min(unlabeled_batch, n_unlabeled), np.random.default_rng(unlabeled_ss))
    while True:
        yield next(labeled), next(unlabeled)


class _EpochLog:
    """JSON-lines progress writer; a None path disables it."""

    def __init__(self, path):
        self._fh = open(path, "w", encoding="utf-8") if path else None

    def write(self, **record):
        if self._fh is not None:
            self._fh.write(json.dumps(record, sort_keys=True) + "\n")
            self._fh.flush()

    def close(self):
        if self._fh is not None:
            self._fh.close()


def _require_labeled(dataset):
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if dataset.labels is None:
        raise ValueError("labeled dataset required")
    counts = np.bincount(dataset.labels, minlength=dataset.n_classes)
    if np.any(counts == 0):
        missing = int(np.flatnonzero(counts == 0)[0])
        raise ValueError(f"class {missing} has no examples")


def pretrain(dataset, arch, config, hidden=32, log_path=None):
    """Minibatch SGD on mean cross-entropy from a seeded Glorot init."""
    _require_labeled(dataset)
    ss = np.random.SeedSequence([int(config.seed), 0])
    init_ss, order_ss = ss.spawn(2)
    params = init_params(arch, dataset.n_features, dataset.n_classes, hidden=hidden, seed=init_ss)
    state = OptimizerState.zeros_like(params)
    batch = min(config.labeled_batch, len(dataset))
    order_rng = np.random.default_rng(order_ss)
    stream = _chunk_stream(len(dataset), batch, order_rng)
    n_steps = math.ceil(len(dataset) / batch)

    log = _EpochLog(log_path)
    started = time.perf_counter()
    try:
        for epoch in range(config.epochs):
            ce_total = 0.0
            for _ in range(n_steps):
                idx = next(stream)
                objective = MinibatchObjective(
                    labeled_x=dataset.features[idx],
                    labeled_y=dataset.labels[idx],
                    loss_cfg=config.loss,
                )
                ce, _, grads = loss_parts_and_grad(params, objective)
                params, state = sgd_step(params, grads, state, config)
                ce_total += ce
            log.write(
                epoch=epoch + 1,
                ce=ce_total / n_steps,
                transductive_loss=0.0,
                wall_time=time.perf_counter() - started,
            )
    finally:
        log.close()
    return params


def build_snapshot(params, test_features, source_tag=""):
    """Freeze pseudo-labels and softmax-response confidences for a test set."""
    X = np.asarray(test_features, dtype=np.float64)
    probs = probs_batch(params, X)
    return Snapshot(
        pseudo_labels=np.argmax(probs, axis=1).astype(np.int64),
        confidences=np.max(probs, axis=1),
        source_tag=source_tag,
    )


def _finetune(theta0, train, test_features, config, unlabeled_term, log_path):
    X_u = np.asarray(test_features, dtype=np.float64)
    _require_labeled(train)
    n_unlabeled = X_u.shape[0]

    degenerate = n_unlabeled < 2
    if degenerate:
        warnings.warn("fewer than 2 test instances: fine-tuning on cross-entropy only")

    snapshot = None
    if not degenerate and unlabeled_term == "pair":
        snapshot = build_snapshot(theta0, X_u)

    ss = np.random.SeedSequence([int(config.seed), 1])
    batches_ss, perm_ss = ss.spawn(2)
    perm_rng = np.random.default_rng(perm_ss)

    params = theta0
    state = OptimizerState.zeros_like(params)
    if degenerate:
        n_steps = math.ceil(len(train) / min(config.labeled_batch, len(train)))
        stream = _chunk_stream(
            len(train), min(config.labeled_batch, len(train)), np.random.default_rng(batches_ss.spawn(2)[0])
        )
    else:
        n_steps = steps_per_epoch(len(train), n_unlabeled, config.labeled_batch, config.unlabeled_batch)
        stream = cyclical_batches(
            len(train), n_unlabeled, config.labeled_batch, config.unlabeled_batch, batches_ss
        )

    log = _EpochLog(log_path)
    started = time.perf_counter()
    try:
        for epoch in range(config.epochs):
            ce_total = 0.0
            term_total = 0.0
            for _ in range(n_steps):
                if degenerate:
                    l_idx = next(stream)
                    objective = MinibatchObjective(
                        labeled_x=train.features[l_idx],
                        labeled_y=train.labels[l_idx],
                        loss_cfg=config.loss,
                    )
                else:
                    l_idx, u_idx = next(stream)
                    perm = perm_rng.permutation(len(u_idx))
                    view = snapshot.take(u_idx) if snapshot is not None else None
                    objective = MinibatchObjective(
                        labeled_x=train.features[l_idx],
                        labeled_y=train.labels[l_idx],
                        unlabeled_x=X_u[u_idx],
                        pseudo=None if view is None else view.pseudo_labels,
                        kappa=None if view is None else view.confidences,
                        perm=perm,
                        loss_cfg=config.loss,
                        unlabeled_term=unlabeled_term,
                    )
                ce, term, grads = loss_parts_and_grad(params, objective)
                params, state = sgd_step(params, grads, state, config)
                ce_total += ce
                term_total += term
            log.write(
                epoch=epoch + 1,
                ce=ce_total / n_steps,
                transductive_loss=term_total / n_steps,
                wall_time=time.perf_counter() - started,
            )
    finally:
        log.close()
    return params


def transboost_finetune(theta0, train, test_features, config, log_path=None):
    """Fine-tune on the combined objective: mean CE + lam * sampled-pair loss.

    The pseudo-labels and confidences are snapshotted from ``theta0``
    before the first step and held fixed for the whole run. Each step
    draws one labeled and one unlabeled batch cyclically, pairs the
    unlabeled batch through a fresh random permutation, and applies one
    optimizer step.
    """
    return _finetune(theta0, train, test_features, config, "pair", log_path)


def entmin_finetune(theta0, train, test_features, config, log_path=None):
    """Entropy-minimization baseline: same loop, unlabeled term = mean
    Shannon entropy (natural log) of the batch predictions."""
    return _finetune(theta0, train, test_features, config, "entropy", log_path)
