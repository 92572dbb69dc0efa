# Scratch: evaluate full acceptance bundle (criteria 5/6/7) per scenario.
import numpy as np
from concurrent.futures import ProcessPoolExecutor
import transboost as tb
from transboost.data import SplitSpec
from transboost.transloss import TransLossConfig


def one(args):
    (ds_seed_mode, noise, lr, epochs, lam, arch, hidden, wd, pre_ep, pre_lr, seed) = args
    ds_seed = seed if ds_seed_mode == "vary" else ds_seed_mode
    ds = tb.gen_blobs(2, 1200, 16, center_scale=1.0, noise_sigma=noise, seed=ds_seed)
    spec = SplitSpec(train_fraction=0.1, test_fraction=1.0, seed=seed, test_share=1 / 6)
    train, test, y_u = tb.transductive_split(ds, spec)
    pcfg = tb.TrainConfig(epochs=pre_ep, lr=pre_lr, seed=seed, weight_decay=1e-4)
    theta0 = tb.pretrain(train, arch, pcfg, hidden=hidden)
    base = tb.accuracy(theta0, test.features, y_u)
    snap = tb.build_snapshot(theta0, test.features)
    out = {"base": base}
    for variant in ("separate", "attract", "both"):
        fcfg = tb.TrainConfig(epochs=epochs, lr=lr, seed=seed, weight_decay=wd,
                              loss=TransLossConfig(lam=lam, variant=variant))
        theta = tb.transboost_finetune(theta0, train, test.features, fcfg)
        out[variant] = (tb.accuracy(theta, test.features, y_u) - base) * 100
        if variant == "separate":
            out["rel"] = tb.loss_improvement(theta0, theta, test.features, snap, fcfg.loss)
    fcfg = tb.TrainConfig(epochs=epochs, lr=lr, seed=seed, weight_decay=wd,
                          loss=TransLossConfig(lam=0.0))
    theta = tb.transboost_finetune(theta0, train, test.features, fcfg)
    out["ce"] = (tb.accuracy(theta, test.features, y_u) - base) * 100
    return out


def bundle(pool, ds_seed_mode, noise, lr, epochs, lam, arch, hidden=32, wd=1e-4,
           pre_ep=100, pre_lr=1e-3, seeds=range(10)):
    rows = list(pool.map(one, [
        (ds_seed_mode, noise, lr, epochs, lam, arch, hidden, wd, pre_ep, pre_lr, s)
        for s in seeds
    ]))
    sep = np.array([r["separate"] for r in rows])
    att = np.array([r["attract"] for r in rows])
    both = np.array([r["both"] for r in rows])
    ce = np.array([r["ce"] for r in rows])
    rel = np.array([r["rel"] for r in rows], dtype=float)
    base = np.mean([r["base"] for r in rows])
    ok5 = sep.mean() >= 1.0
    ok6 = (sep.mean() >= att.mean()) and abs(both.mean() - sep.mean()) <= 0.5
    ok7 = rel.min() > 0
    return dict(sep=sep, att=att, both=both, ce=ce, rel=rel, base=base,
                ok=(ok5, ok6, ok7))


if __name__ == "__main__":
    with ProcessPoolExecutor(max_workers=2) as pool:
        for mode in ("vary",):
            for noise in (1.8, 2.2):
                for lr, ep in ((3e-3, 480), (1e-2, 480)):
                    r = bundle(pool, mode, noise, lr, ep, 2.0, "linear")
                    print(
                        f"{mode} n={noise:.1f} lr={lr:.0e} ep={ep} -> "
                        f"sep {r['sep'].mean():+5.2f}+-{r['sep'].std():4.2f} (min {r['sep'].min():+5.2f}) "
                        f"att {r['att'].mean():+5.2f} both {r['both'].mean():+5.2f} ce {r['ce'].mean():+5.2f} "
                        f"base {r['base']:.3f} min_rel {r['rel'].min():5.1f} ok={r['ok']}",
                        flush=True,
                    )
