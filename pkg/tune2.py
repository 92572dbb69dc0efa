# Scratch: converged-pretrain scenarios; attribution via CE-only control.
import numpy as np
from concurrent.futures import ProcessPoolExecutor
import transboost as tb
from transboost.data import SplitSpec
from transboost.transloss import TransLossConfig


def one_seed(args):
    (noise, pre_ep, pre_lr, lr, epochs, lam, arch, hidden, wd, seed) = args
    ds = tb.gen_blobs(2, 1200, 16, center_scale=1.0, noise_sigma=noise, seed=seed)
    spec = SplitSpec(train_fraction=0.1, test_fraction=1.0, seed=seed, test_share=1 / 6)
    train, test, hidden_y = tb.transductive_split(ds, spec)
    pcfg = tb.TrainConfig(epochs=pre_ep, lr=pre_lr, seed=seed, weight_decay=1e-4)
    theta0 = tb.pretrain(train, arch, pcfg, hidden=hidden)
    train_acc = tb.accuracy(theta0, train.features, train.labels)
    base = tb.accuracy(theta0, test.features, hidden_y)
    out = {"base": base, "train_acc": train_acc}
    for name, l in (("tb", lam), ("ce", 0.0)):
        fcfg = tb.TrainConfig(
            epochs=epochs, lr=lr, seed=seed, weight_decay=wd, loss=TransLossConfig(lam=l)
        )
        theta = tb.transboost_finetune(theta0, train, test.features, fcfg)
        out[name] = tb.accuracy(theta, test.features, hidden_y) - base
    return out


def evaluate(combo, seeds, pool):
    rows = list(pool.map(one_seed, [combo + (s,) for s in seeds]))
    tbg = np.array([r["tb"] for r in rows]) * 100
    ceg = np.array([r["ce"] for r in rows]) * 100
    base = np.mean([r["base"] for r in rows])
    tracc = np.mean([r["train_acc"] for r in rows])
    return tbg, ceg, base, tracc


if __name__ == "__main__":
    import sys

    seeds = list(range(10))
    combos = [
        # noise pre_ep pre_lr lr    ep   lam  arch    hid  wd
        (1.8, 800, 3e-3, 1e-3, 240, 2.0, "mlp1", 32, 1e-4),
        (2.2, 800, 3e-3, 1e-3, 240, 2.0, "mlp1", 32, 1e-4),
        (1.8, 800, 3e-3, 1e-3, 240, 2.0, "mlp1", 16, 1e-4),
        (2.2, 800, 3e-3, 1e-3, 240, 2.0, "mlp1", 16, 1e-4),
        (1.8, 800, 3e-3, 3e-3, 240, 2.0, "mlp1", 32, 1e-4),
        (2.2, 800, 3e-3, 3e-3, 240, 2.0, "mlp1", 32, 1e-4),
    ]
    with ProcessPoolExecutor(max_workers=2) as pool:
        for combo in combos:
            tbg, ceg, base, tracc = evaluate(combo, seeds, pool)
            print(
                f"n={combo[0]:.1f} hid={combo[7]} lr={combo[3]:.0e} -> "
                f"tb {tbg.mean():+5.2f}+-{tbg.std():4.2f} (min {tbg.min():+5.2f}) "
                f"ce {ceg.mean():+5.2f} base {base:.3f} train_acc {tracc:.3f}",
                flush=True,
            )
