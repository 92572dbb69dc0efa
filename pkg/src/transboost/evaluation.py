"""Metrics, run reports, the fraction sweep grid, and the variant ablation.

Hidden test labels enter the package only here: training code receives
features alone, and every accuracy against the true test labels is
computed by this module after the fact.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data import split_indices
from .model import predict_batch, probs_batch
from .trainer import build_snapshot, entmin_finetune, pretrain, transboost_finetune
from .transloss import EPS_LOG, VARIANTS, exact_loss

LOSS_KINDS = ("zero_one", "cross_entropy")


def risk(params, X, Y, loss_kind="zero_one"):
    """Average pointwise loss over a labeled evaluation set."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("risk over an empty set is undefined")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("features and labels disagree in length")
    if loss_kind == "zero_one":
        return float(np.mean(predict_batch(params, X) != Y))
    if loss_kind == "cross_entropy":
        probs = probs_batch(params, X)
        return float(-np.log(probs[np.arange(len(Y)), Y] + EPS_LOG).mean())
    raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")


def accuracy(params, X, Y):
    """Top-1 accuracy = 1 - zero-one risk."""
    return 1.0 - risk(params, X, Y, "zero_one")


def improvement_pp(inductive_top1, transductive_top1):
    """Accuracy gain in percentage points."""
    return (transductive_top1 - inductive_top1) * 100.0


@dataclass
class RunReport:
    """One transductive run: accuracies as fractions, improvement in
    percentage points, pairwise-loss bookkeeping, and run metadata."""

    inductive_top1: float
    transductive_top1: float
    improvement: float
    loss_before: float | None = None
    loss_after: float | None = None
    loss_rel_improvement: float | None = None
    holdout_inductive_top1: float | None = None
    holdout_finetuned_top1: float | None = None
    config: dict | None = None
    seed: int | None = None
    wall_time: float | None = None

    def to_dict(self):
        return asdict(self)


def compare(theta0, theta, X_u, Y_u):
    """Score the pretrained and fine-tuned models on the same test set."""
    ind = accuracy(theta0, X_u, Y_u)
    trans = accuracy(theta, X_u, Y_u)
    return RunReport(
        inductive_top1=ind,
        transductive_top1=trans,
        improvement=improvement_pp(ind, trans),
    )


def loss_improvement(theta0, theta, X_u, snapshot, config):
    """Relative pairwise-loss improvement in percent, or None if the
    starting loss is not positive (the ratio is undefined there)."""
    before = exact_loss(probs_batch(theta0, X_u), snapshot, config)
    after = exact_loss(probs_batch(theta, X_u), snapshot, config)
    if before <= 0.0:
        return None
    return (before - after) / before * 100.0


def build_report(theta0, theta, X_u, Y_u, snapshot, loss_cfg, holdout=None):
    """Fill a RunReport: accuracies, pairwise-loss before/after, holdout."""
    report = compare(theta0, theta, X_u, Y_u)
    report.loss_before = exact_loss(probs_batch(theta0, X_u), snapshot, loss_cfg)
    report.loss_after = exact_loss(probs_batch(theta, X_u), snapshot, loss_cfg)
    if report.loss_before > 0.0:
        report.loss_rel_improvement = (
            (report.loss_before - report.loss_after) / report.loss_before * 100.0
        )
    if holdout is not None:
        X_h, Y_h = holdout
        report.holdout_inductive_top1 = accuracy(theta0, X_h, Y_h)
        report.holdout_finetuned_top1 = accuracy(theta, X_h, Y_h)
    return report


def run_transductive(dataset, spec, arch, pretrain_cfg, finetune_cfg, hidden=32, method="transboost"):
    """Full single-run pipeline: split, pretrain, fine-tune, report.

    ``method`` picks the fine-tuning objective: "transboost" (sampled-pair
    loss) or "entmin" (entropy baseline). The report's loss columns always
    track the pairwise loss so both methods are measured on the same yardstick.
    """
    started = time.perf_counter()
    train_idx, test_idx, holdout_idx = split_indices(dataset, spec)
    train = dataset.subset(train_idx)
    X_u = dataset.features[test_idx]
    Y_u = dataset.labels[test_idx]

    theta0 = pretrain(train, arch, pretrain_cfg, hidden=hidden)
    snapshot = build_snapshot(theta0, X_u)
    finetune = {"transboost": transboost_finetune, "entmin": entmin_finetune}[method]
    theta = finetune(theta0, train, X_u, finetune_cfg)

    holdout = None
    if len(holdout_idx) > 0:
        holdout = (dataset.features[holdout_idx], dataset.labels[holdout_idx])
    report = build_report(theta0, theta, X_u, Y_u, snapshot, finetune_cfg.loss, holdout=holdout)
    report.config = {
        "dataset": dataset.name,
        "arch": arch,
        "hidden": hidden,
        "method": method,
        "split": asdict(spec),
        "pretrain": asdict(pretrain_cfg),
        "finetune": asdict(finetune_cfg),
    }
    report.seed = finetune_cfg.seed
    report.wall_time = time.perf_counter() - started
    return report


def _aggregate(reports):
    imps = np.array([r.improvement for r in reports])
    rel = [r.loss_rel_improvement for r in reports if r.loss_rel_improvement is not None]
    out = {
        "n_runs": len(reports),
        "mean_inductive_top1": float(np.mean([r.inductive_top1 for r in reports])),
        "mean_transductive_top1": float(np.mean([r.transductive_top1 for r in reports])),
        "mean_improvement": float(imps.mean()),
        "std_improvement": float(imps.std(ddof=1)) if len(imps) > 1 else 0.0,
        "mean_loss_rel_improvement": float(np.mean(rel)) if rel else None,
    }
    holdouts = [r.holdout_finetuned_top1 for r in reports if r.holdout_finetuned_top1 is not None]
    if holdouts:
        out["mean_holdout_finetuned_top1"] = float(np.mean(holdouts))
        out["mean_holdout_inductive_top1"] = float(
            np.mean([r.holdout_inductive_top1 for r in reports])
        )
    return out


@dataclass
class SweepGrid:
    """Fraction-grid results: cells[i][j] holds per-seed reports for
    (train_fractions[i], test_fractions[j])."""

    train_fractions: list
    test_fractions: list
    seeds: list
    cells: list = field(default_factory=list)

    def cell(self, i, j):
        return self.cells[i][j]

    def rows(self):
        """Flat per-run rows in deterministic (train, test, seed) order."""
        for i, tf in enumerate(self.train_fractions):
            for j, uf in enumerate(self.test_fractions):
                for seed, report in zip(self.seeds, self.cells[i][j]):
                    yield {
                        "train_fraction": tf,
                        "test_fraction": uf,
                        "seed": seed,
                        "inductive_top1": report.inductive_top1,
                        "transductive_top1": report.transductive_top1,
                        "improvement": report.improvement,
                        "loss_rel_improvement": report.loss_rel_improvement,
                    }

    def to_dict(self):
        return {
            "train_fractions": list(self.train_fractions),
            "test_fractions": list(self.test_fractions),
            "seeds": list(self.seeds),
            "cells": [
                [
                    {
                        "train_fraction": tf,
                        "test_fraction": uf,
                        "aggregate": _aggregate(cell),
                        "runs": [r.to_dict() for r in cell],
                    }
                    for uf, cell in zip(self.test_fractions, row)
                ]
                for tf, row in zip(self.train_fractions, self.cells)
            ],
        }


def _sweep_task(args):
    (dataset, spec, arch, pretrain_cfg, finetune_cfg, hidden, key) = args
    return key, run_transductive(dataset, spec, arch, pretrain_cfg, finetune_cfg, hidden=hidden)


def sweep(
    dataset,
    train_fractions,
    test_fractions,
    seeds,
    arch,
    pretrain_cfg,
    finetune_cfg,
    hidden=32,
    stratified=True,
    test_share=0.2,
    jobs=1,
):
    """Run the full (train fraction x test fraction x seed) grid.

    Every run is independent given its seed, so cells can run in any
    order (or in parallel) and still assemble into the same grid.
    """
    from .data import SplitSpec

    tasks = []
    for i, tf in enumerate(train_fractions):
        for j, uf in enumerate(test_fractions):
            for seed in seeds:
                spec = SplitSpec(
                    train_fraction=tf,
                    test_fraction=uf,
                    stratified=stratified,
                    seed=seed,
                    test_share=test_share,
                )
                tasks.append(
                    (
                        dataset,
                        spec,
                        arch,
                        pretrain_cfg.with_seed(seed),
                        finetune_cfg.with_seed(seed),
                        hidden,
                        (i, j, seed),
                    )
                )

    results = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for key, report in pool.map(_sweep_task, tasks):
                results[key] = report
    else:
        for task in tasks:
            key, report = _sweep_task(task)
            results[key] = report

    cells = [
        [[results[(i, j, seed)] for seed in seeds] for j in range(len(test_fractions))]
        for i in range(len(train_fractions))
    ]
    return SweepGrid(list(train_fractions), list(test_fractions), list(seeds), cells)


def write_sweep_csv(grid, path):
    """Flat CSV of the grid, one row per run, plot-ready."""
    columns = (
        "train_fraction",
        "test_fraction",
        "seed",
        "inductive_top1",
        "transductive_top1",
        "improvement",
        "loss_rel_improvement",
    )
    def cell(value):
        if value is None:
            return ""
        return repr(value) if isinstance(value, float) else str(value)

    lines = [",".join(columns)]
    for row in grid.rows():
        lines.append(",".join(cell(row[c]) for c in columns))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def ablation(dataset, seeds, arch, pretrain_cfg, finetune_cfg, hidden=32, spec_template=None):
    """Fine-tune under all three loss variants with shared seeds and splits.

    Identical seeds give bit-identical pretrained weights and splits in
    every variant, so the comparison isolates the loss."""
    from .data import SplitSpec

    base_spec = spec_template if spec_template is not None else SplitSpec()
    out = {}
    for variant in VARIANTS:
        reports = []
        for seed in seeds:
            spec = SplitSpec(
                train_fraction=base_spec.train_fraction,
                test_fraction=base_spec.test_fraction,
                stratified=base_spec.stratified,
                seed=seed,
                test_share=base_spec.test_share,
            )
            cfg = replace(finetune_cfg.with_seed(seed), loss=finetune_cfg.loss.with_variant(variant))
            reports.append(
                run_transductive(
                    dataset, spec, arch, pretrain_cfg.with_seed(seed), cfg, hidden=hidden
                )
            )
        out[variant] = {"aggregate": _aggregate(reports), "runs": [r.to_dict() for r in reports]}
    return out
