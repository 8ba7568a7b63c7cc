"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--n 1000000] [--probes 20000]
"""

import argparse
import time

import numpy as np

from lims import rank_model
from lims.kernels import backends


def _time(fn, reps=3):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--probes", type=int, default=20_000)
    ap.add_argument("--strings", type=int, default=2_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    keys = np.sort(rng.normal(size=args.n))
    model = rank_model.train(keys, 20)
    xs = rng.choice(keys, size=args.probes)
    letters = np.array(list("ABCDEFGHIJKLMNOPQRSTUVWXYZ"))
    words = ["".join(rng.choice(letters, size=65)) for _ in range(args.strings)]
    q = words[0]

    mods = backends()
    print(f"{'kernel':<28}" + "".join(f"{name:>14}" for name in mods))
    cases = {
        "locate_many (learned)": lambda k: k.locate_many(model.coefficients, model.key_min, model.key_max,
                                                         keys, xs),
        "binary_many": lambda k: k.binary_many(keys, xs),
        f"edit_distance_many x{args.strings}": lambda k: k.edit_distance_many(q, words),
    }
    for label, fn in cases.items():
        row = [_time(lambda: fn(mod)) for mod in mods.values()]
        print(f"{label:<28}" + "".join(f"{t * 1e3:>12.2f}ms" for t in row))
    if "cython" in mods:
        a = mods["python"].locate_many(model.coefficients, model.key_min, model.key_max, keys, xs)
        b = mods["cython"].locate_many(model.coefficients, model.key_min, model.key_max, keys, xs)
        assert np.array_equal(np.asarray(a), np.asarray(b)), "backends disagree"


if __name__ == "__main__":
    main()
