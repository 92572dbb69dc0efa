"""Command-line front end.

Every command is driven by one JSON config file; the fully resolved
config (defaults filled in, overrides applied) is echoed into the output
directory next to the artifacts, so a run can be reproduced from its
own output. Set TRANSBOOST_LOG=debug for chatty logging.

Commands: pretrain, transboost, entmin, sweep, ablate.
"""

import argparse
import copy
import json
import logging
import os
import sys
import time

from . import data, evaluation, model, trainer
from .transloss import TransLossConfig

log = logging.getLogger("transboost")

DEFAULT_CONFIG = {
    "dataset": {
        "kind": "blobs",
        "classes": 2,
        "per_class": 1200,
        "dim": 16,
        "center_scale": 1.0,
        "noise_sigma": 2.2,
        "seed": 0,
        "path": None,
    },
    "split": {
        "train_fraction": 1.0,
        "test_fraction": 1.0,
        "stratified": True,
        "seed": 0,
        "test_share": 0.2,
    },
    "model": {"arch": "linear", "hidden": 32},
    "pretrain": {
        "epochs": 100,
        "labeled_batch": 64,
        "unlabeled_batch": 64,
        "lr": 1e-3,
        "momentum": 0.9,
        "nesterov": True,
        "weight_decay": 1e-4,
        "seed": 0,
    },
    "finetune": {
        "epochs": 120,
        "labeled_batch": 64,
        "unlabeled_batch": 64,
        "lr": 1e-3,
        "momentum": 0.9,
        "nesterov": True,
        "weight_decay": 1e-4,
        "seed": 0,
    },
    "loss": {"lambda": 2.0, "variant": "separate", "eps_norm": 1e-12},
    "sweep": {
        "train_fractions": [0.05, 0.1, 0.2, 1.0],
        "test_fractions": [0.1, 0.25, 0.5, 1.0],
        "seeds": list(range(10)),
    },
    "ablate": {"seeds": list(range(10))},
    "out": "runs/out",
}


def _merge(defaults, override, path="config"):
    if not isinstance(override, dict):
        raise ValueError(f"{path}: expected an object")
    merged = copy.deepcopy(defaults)
    for key, value in override.items():
        if key not in defaults:
            raise ValueError(f"{path}.{key}: unknown config key")
        if isinstance(defaults[key], dict):
            merged[key] = _merge(defaults[key], value, f"{path}.{key}")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path, overrides):
    """Merge the config file over the defaults and apply CLI overrides."""
    with open(path, encoding="utf-8") as fh:
        user = json.load(fh)
    cfg = _merge(DEFAULT_CONFIG, user)
    if overrides.get("seed") is not None:
        seed = int(overrides["seed"])
        cfg["split"]["seed"] = seed
        cfg["pretrain"]["seed"] = seed
        cfg["finetune"]["seed"] = seed
    if overrides.get("lambda") is not None:
        cfg["loss"]["lambda"] = float(overrides["lambda"])
    if overrides.get("out") is not None:
        cfg["out"] = overrides["out"]
    return cfg


def _loss_config(cfg):
    c = cfg["loss"]
    return TransLossConfig(lam=c["lambda"], variant=c["variant"], eps_norm=c["eps_norm"])


def _train_config(cfg, section):
    c = cfg[section]
    return trainer.TrainConfig(
        epochs=c["epochs"],
        labeled_batch=c["labeled_batch"],
        unlabeled_batch=c["unlabeled_batch"],
        lr=c["lr"],
        momentum=c["momentum"],
        nesterov=c["nesterov"],
        weight_decay=c["weight_decay"],
        seed=c["seed"],
        loss=_loss_config(cfg),
    )


def _split_spec(cfg):
    c = cfg["split"]
    return data.SplitSpec(
        train_fraction=c["train_fraction"],
        test_fraction=c["test_fraction"],
        stratified=c["stratified"],
        seed=c["seed"],
        test_share=c["test_share"],
    )


def _dataset(cfg):
    c = cfg["dataset"]
    if c["kind"] == "blobs":
        return data.gen_blobs(
            c["classes"], c["per_class"], c["dim"], c["center_scale"], c["noise_sigma"], c["seed"]
        )
    if c["kind"] == "rings":
        return data.gen_rings(c["classes"], c["per_class"], c["noise_sigma"], c["seed"])
    if c["kind"] == "csv":
        if not c["path"]:
            raise ValueError("dataset.kind=csv needs dataset.path")
        return data.load_csv(c["path"], n_classes=c.get("classes"))
    raise ValueError(f"unknown dataset kind {c['kind']!r}")


def _write_json(obj, path):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _prepare_out(cfg):
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    _write_json(cfg, os.path.join(out, "config.json"))
    return out


def cmd_pretrain(cfg):
    out = _prepare_out(cfg)
    dataset = _dataset(cfg)
    train, _, _ = data.transductive_split(dataset, _split_spec(cfg))
    params = trainer.pretrain(
        train,
        cfg["model"]["arch"],
        _train_config(cfg, "pretrain"),
        hidden=cfg["model"]["hidden"],
        log_path=os.path.join(out, "pretrain_log.jsonl"),
    )
    path = os.path.join(out, "checkpoint.json")
    model.save_checkpoint(params, path, seed=cfg["pretrain"]["seed"], tag=f"pretrain:{dataset.name}")
    log.info("wrote %s", path)
    return 0


def _cmd_finetune(cfg, checkpoint, method):
    out = _prepare_out(cfg)
    dataset = _dataset(cfg)
    spec = _split_spec(cfg)
    train_idx, test_idx, holdout_idx = data.split_indices(dataset, spec)
    train = dataset.subset(train_idx)
    X_u = dataset.features[test_idx]
    Y_u = dataset.labels[test_idx]

    theta0, meta = model.load_checkpoint(checkpoint)
    finetune_cfg = _train_config(cfg, "finetune")
    started = time.perf_counter()
    snapshot = trainer.build_snapshot(theta0, X_u, source_tag=meta["tag"])
    run = trainer.transboost_finetune if method == "transboost" else trainer.entmin_finetune
    theta = run(theta0, train, X_u, finetune_cfg, log_path=os.path.join(out, "finetune_log.jsonl"))

    holdout = None
    if len(holdout_idx) > 0:
        holdout = (dataset.features[holdout_idx], dataset.labels[holdout_idx])
    report = evaluation.build_report(
        theta0, theta, X_u, Y_u, snapshot, finetune_cfg.loss, holdout=holdout
    )
    report.config = cfg
    report.seed = finetune_cfg.seed
    report.wall_time = time.perf_counter() - started

    path = os.path.join(out, "checkpoint.json")
    model.save_checkpoint(theta, path, seed=finetune_cfg.seed, tag=f"{method}:{dataset.name}")
    _write_json(report.to_dict(), os.path.join(out, "report.json"))
    log.info(
        "%s: top-1 %.4f -> %.4f (%+.2f pp)",
        method,
        report.inductive_top1,
        report.transductive_top1,
        report.improvement,
    )
    return 0


def cmd_transboost(cfg, checkpoint):
    return _cmd_finetune(cfg, checkpoint, "transboost")


def cmd_entmin(cfg, checkpoint):
    return _cmd_finetune(cfg, checkpoint, "entmin")


def cmd_sweep(cfg, jobs):
    out = _prepare_out(cfg)
    dataset = _dataset(cfg)
    grid = evaluation.sweep(
        dataset,
        cfg["sweep"]["train_fractions"],
        cfg["sweep"]["test_fractions"],
        cfg["sweep"]["seeds"],
        cfg["model"]["arch"],
        _train_config(cfg, "pretrain"),
        _train_config(cfg, "finetune"),
        hidden=cfg["model"]["hidden"],
        stratified=cfg["split"]["stratified"],
        test_share=cfg["split"]["test_share"],
        jobs=jobs,
    )
    _write_json(grid.to_dict(), os.path.join(out, "sweep_grid.json"))
    csv_path = os.path.join(out, "sweep.csv")
    tmp = f"{csv_path}.tmp"
    evaluation.write_sweep_csv(grid, tmp)
    os.replace(tmp, csv_path)
    log.info("wrote %s", csv_path)
    return 0


def cmd_ablate(cfg):
    out = _prepare_out(cfg)
    dataset = _dataset(cfg)
    results = evaluation.ablation(
        dataset,
        cfg["ablate"]["seeds"],
        cfg["model"]["arch"],
        _train_config(cfg, "pretrain"),
        _train_config(cfg, "finetune"),
        hidden=cfg["model"]["hidden"],
        spec_template=_split_spec(cfg),
    )
    _write_json(results, os.path.join(out, "ablation.json"))

    lines = ["variant,seed,inductive_top1,transductive_top1,improvement,loss_rel_improvement"]
    for variant, block in results.items():
        for run in block["runs"]:
            rel = run["loss_rel_improvement"]
            lines.append(
                ",".join(
                    [
                        variant,
                        str(run["seed"]),
                        repr(run["inductive_top1"]),
                        repr(run["transductive_top1"]),
                        repr(run["improvement"]),
                        "" if rel is None else repr(rel),
                    ]
                )
            )
    tmp = os.path.join(out, "ablation.csv.tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, os.path.join(out, "ablation.csv"))
    log.info("wrote %s", os.path.join(out, "ablation.json"))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="transboost", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False, jobs=False):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override split/train seeds")
        p.add_argument("--lambda", dest="lam", type=float, default=None, help="override loss weight")
        p.add_argument("--out", default=None, help="override output directory")
        if checkpoint:
            p.add_argument("--checkpoint", required=True, help="pretrained checkpoint JSON")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="parallel worker count")

    common(sub.add_parser("pretrain", help="train a model on the labeled split"))
    common(sub.add_parser("transboost", help="transductive fine-tune a checkpoint"), checkpoint=True)
    common(sub.add_parser("entmin", help="entropy-minimization baseline"), checkpoint=True)
    common(sub.add_parser("sweep", help="run the fraction grid"), jobs=True)
    common(sub.add_parser("ablate", help="compare loss variants"))
    return parser


def main(argv=None):
    level = logging.DEBUG if os.environ.get("TRANSBOOST_LOG", "").lower() == "debug" else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"seed": args.seed, "lambda": args.lam, "out": args.out})
        if args.command == "pretrain":
            return cmd_pretrain(cfg)
        if args.command == "transboost":
            return cmd_transboost(cfg, args.checkpoint)
        if args.command == "entmin":
            return cmd_entmin(cfg, args.checkpoint)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.jobs)
        if args.command == "ablate":
            return cmd_ablate(cfg)
        raise ValueError(f"unknown command {args.command!r}")
    except Exception as exc:  # CLI boundary: report and exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
