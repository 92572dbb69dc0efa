# Scratch script: explore acceptance-scenario knobs (not part of the package).
import itertools
import numpy as np
import transboost as tb
from transboost.data import SplitSpec
from transboost.transloss import TransLossConfig


def run(noise, lr, epochs, lam, arch, hidden, seeds, label_frac=0.1, center=1.0,
        pre_epochs=100, wd=1e-4, method="transboost"):
    imps, inds, rels = [], [], []
    for seed in seeds:
        ds = tb.gen_blobs(2, 1200, 16, center_scale=center, noise_sigma=noise, seed=seed)
        spec = SplitSpec(train_fraction=label_frac, test_fraction=1.0, seed=seed, test_share=1/6)
        train, test, hidden_y = tb.transductive_split(ds, spec)
        loss_cfg = TransLossConfig(lam=lam)
        pcfg = tb.TrainConfig(epochs=pre_epochs, seed=seed, loss=loss_cfg, weight_decay=wd)
        fcfg = tb.TrainConfig(epochs=epochs, lr=lr, seed=seed, loss=loss_cfg, weight_decay=wd)
        theta0 = tb.pretrain(train, arch, pcfg, hidden=hidden)
        fn = tb.transboost_finetune if method == "transboost" else tb.entmin_finetune
        theta = fn(theta0, train, test.features, fcfg)
        rep = tb.compare(theta0, theta, test.features, hidden_y)
        snap = tb.build_snapshot(theta0, test.features)
        rel = tb.loss_improvement(theta0, theta, test.features, snap, loss_cfg)
        imps.append(rep.improvement)
        inds.append(rep.inductive_top1)
        rels.append(rel if rel is not None else float("nan"))
    return np.mean(imps), np.std(imps), np.mean(inds), min(rels), np.min(imps)


if __name__ == "__main__":
    seeds = list(range(10))
    print(f"{'noise':>5} {'lr':>7} {'ep':>4} {'lam':>4} {'arch':>6} -> mean_imp  std  base_acc min_rel min_imp")
    for noise, lr, epochs, lam, arch in itertools.product(
        [1.8, 2.2, 2.6], [1e-3, 3e-3], [120], [2.0], ["linear"]
    ):
        m, s, b, mr, mi = run(noise, lr, epochs, lam, arch, 32, seeds)
        print(f"{noise:5.1f} {lr:7.0e} {epochs:4d} {lam:4.1f} {arch:>6} -> {m:+7.3f} {s:5.2f} {b:8.3f} {mr:7.1f} {mi:+6.2f}")
