"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 100,300,1000] [--repeat 5]

Numba functions are called once before timing so compilation is excluded.
"""
import argparse
import time

import numpy as np

from sscc import _kernels_numba as nb
from sscc import _kernels_numpy as npk


def _cases(n: int, d: int, k: int, rng):
    X = rng.normal(size=(n, d))
    D = npk.pairwise_distances(X)
    labels = rng.integers(0, k, n)
    labels[:k] = np.arange(k)
    init = X[:k].copy()
    u = rng.random(k)
    return {
        "pairwise_distances": lambda m: m.pairwise_distances(X),
        "kmeanspp_init": lambda m: m.kmeanspp_init(X, k, u),
        "kmeans_lloyd": lambda m: m.kmeans_lloyd(X, init, 300, 1e-6),
        "pam": lambda m: m.pam(D, k, 100),
        "silhouette": lambda m: m.silhouette(D, labels, k),
    }


def _best(fn, mod, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(mod)
        times.append(time.perf_counter() - t)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="100,300,1000")
    ap.add_argument("--dims", type=int, default=8)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    for fn in _cases(20, args.dims, args.k, rng).values():
        fn(nb)  # compile
    print(f"{'kernel':<20} {'n':>6} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, fn in _cases(n, args.dims, args.k, rng).items():
            t_np = _best(fn, npk, args.repeat) * 1e3
            t_nb = _best(fn, nb, args.repeat) * 1e3
            print(f"{name:<20} {n:>6} {t_np:>10.3f} {t_nb:>10.3f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
