# Scratch: fixed-dataset scenario search; run seeds vary split/train only.
import numpy as np
from concurrent.futures import ProcessPoolExecutor
import transboost as tb
from transboost.data import SplitSpec
from transboost.transloss import TransLossConfig


def one(args):
    (ds_seed, noise, lr, epochs, lam, arch, hidden, wd, pre_ep, pre_lr, seed) = args
    ds = tb.gen_blobs(2, 1200, 16, center_scale=1.0, noise_sigma=noise, seed=ds_seed)
    spec = SplitSpec(train_fraction=0.1, test_fraction=1.0, seed=seed, test_share=1 / 6)
    train, test, y_u = tb.transductive_split(ds, spec)
    pcfg = tb.TrainConfig(epochs=pre_ep, lr=pre_lr, seed=seed, weight_decay=1e-4)
    theta0 = tb.pretrain(train, arch, pcfg, hidden=hidden)
    base = tb.accuracy(theta0, test.features, y_u)
    res = {"base": base}
    snap = tb.build_snapshot(theta0, test.features)
    for name, l in (("tb", lam), ("ce", 0.0)):
        fcfg = tb.TrainConfig(epochs=epochs, lr=lr, seed=seed, weight_decay=wd,
                              loss=TransLossConfig(lam=l))
        theta = tb.transboost_finetune(theta0, train, test.features, fcfg)
        res[name] = (tb.accuracy(theta, test.features, y_u) - base) * 100
        if name == "tb":
            res["rel"] = tb.loss_improvement(theta0, theta, test.features, snap, fcfg.loss)
    return res


def cell(pool, ds_seed, noise, lr, epochs, lam, arch, hidden=32, wd=1e-4,
         pre_ep=100, pre_lr=1e-3, seeds=range(10)):
    rows = list(pool.map(one, [
        (ds_seed, noise, lr, epochs, lam, arch, hidden, wd, pre_ep, pre_lr, s) for s in seeds
    ]))
    tbg = np.array([r["tb"] for r in rows])
    ceg = np.array([r["ce"] for r in rows])
    rel = np.array([r["rel"] for r in rows], dtype=float)
    base = np.mean([r["base"] for r in rows])
    return tbg, ceg, rel, base


if __name__ == "__main__":
    with ProcessPoolExecutor(max_workers=2) as pool:
        for arch in ("linear", "mlp1"):
            for noise in (1.5, 2.0):
                for ds_seed in range(6):
                    tbg, ceg, rel, base = cell(pool, ds_seed, noise, 1e-2, 480, 2.0, arch)
                    print(
                        f"{arch:>6} n={noise:.1f} ds={ds_seed} -> tb {tbg.mean():+5.2f}+-{tbg.std():4.2f} "
                        f"(min {tbg.min():+5.2f}) ce {ceg.mean():+5.2f} base {base:.3f} min_rel {rel.min():5.1f}",
                        flush=True,
                    )
