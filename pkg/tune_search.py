# Scratch: randomized scenario search with CE-only attribution control.
import numpy as np
from concurrent.futures import ProcessPoolExecutor
import transboost as tb
from transboost.data import SplitSpec
from transboost.transloss import TransLossConfig


def one_seed(args):
    (noise, lr, epochs, lam, arch, hidden, wd, seed) = args
    ds = tb.gen_blobs(2, 1200, 16, center_scale=1.0, noise_sigma=noise, seed=seed)
    spec = SplitSpec(train_fraction=0.1, test_fraction=1.0, seed=seed, test_share=1 / 6)
    train, test, hidden_y = tb.transductive_split(ds, spec)
    pcfg = tb.TrainConfig(epochs=100, seed=seed, weight_decay=1e-4)
    theta0 = tb.pretrain(train, arch, pcfg, hidden=hidden)
    base = tb.accuracy(theta0, test.features, hidden_y)
    out = {"base": base}
    for name, l in (("tb", lam), ("ce", 0.0)):
        fcfg = tb.TrainConfig(
            epochs=epochs, lr=lr, seed=seed, weight_decay=wd, loss=TransLossConfig(lam=l)
        )
        theta = tb.transboost_finetune(theta0, train, test.features, fcfg)
        out[name] = tb.accuracy(theta, test.features, hidden_y) - base
    return out


def evaluate(combo, seeds, pool):
    rows = list(pool.map(one_seed, [combo[:-1] + (s,) for s in seeds]))
    tbg = np.array([r["tb"] for r in rows]) * 100
    ceg = np.array([r["ce"] for r in rows]) * 100
    base = np.mean([r["base"] for r in rows])
    return tbg.mean(), tbg.std(), ceg.mean(), base, tbg.min()


if __name__ == "__main__":
    rng = np.random.default_rng(0)
    seeds = list(range(10))
    combos = []
    for _ in range(36):
        noise = rng.choice([1.6, 1.8, 2.0, 2.2])
        lr = rng.choice([1e-3, 3e-3, 1e-2])
        epochs = int(rng.choice([120, 240, 480]))
        lam = rng.choice([1.0, 2.0, 4.0, 8.0])
        arch = rng.choice(["linear", "mlp1"])
        hidden = int(rng.choice([8, 16, 32]))
        wd = rng.choice([1e-4, 1e-3, 1e-2, 3e-2])
        combos.append((noise, lr, epochs, lam, arch, hidden, wd, None))

    with ProcessPoolExecutor(max_workers=2) as pool:
        results = []
        for combo in combos:
            m, s, ce, base, mn = evaluate(combo, seeds, pool)
            results.append((m - ce, combo, m, s, ce, base, mn))
            print(
                f"n={combo[0]:.1f} lr={combo[1]:.0e} ep={combo[2]:>3} lam={combo[3]:.0f} "
                f"{combo[4]:>6}/{combo[5]:<2} wd={combo[6]:.0e} -> tb {m:+5.2f}+-{s:4.2f} "
                f"ce {ce:+5.2f} net {m - ce:+5.2f} base {base:.3f} min {mn:+5.2f}",
                flush=True,
            )
        results.sort(key=lambda r: -(r[2]))
        print("\nTop by tb gain:")
        for r in results[:8]:
            print(r[1][:-1], f"tb {r[2]:+.2f} ce {r[4]:+.2f} net {r[0]:+.2f} min {r[6]:+.2f}")
