"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 10 50 200] [--repeat 200]

Prints one row per (kernel, n) with the median time per call and the
speed-up, after checking both backends agree.
"""

import argparse
import statistics
import time

import numpy as np

from dextra.digraph import random_strongly_connected
from dextra.kernels import numba_impl, numpy_impl
from dextra.objectives import generate_least_squares
from dextra.weights import local_degree_weights, make_tilde


def timeit(fn, args, repeat):
    fn(*args)  # warm-up (triggers compilation)
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def cases(n, p=4, m=6, seed=0):
    g = random_strongly_connected(n, min(1.0, 3.0 / n), seed)
    pair = make_tilde(local_degree_weights(g))
    rows = pair.rows
    inst = generate_least_squares(n, p, m, 0.1, seed)
    rng = np.random.default_rng(seed)
    x, xp, gr, gp = (rng.standard_normal((n, p)) for _ in range(4))
    y = np.abs(rng.standard_normal(n)) + 0.5
    u = rng.standard_normal(p)
    yield "dextra_update", (rows.indptr, rows.indices, rows.a, rows.a_tilde, x, xp, y, gr, gp, 0.05)
    yield "csr_mix", (rows.indptr, rows.indices, rows.a, x)
    yield "ls_grad", (inst.H, inst.h, x)
    yield "residual", (x, u)
    yield "consensus_spread", (x,)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[10, 50, 200])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    if numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':18s} {'n':>5s} {'numpy (us)':>12s} {'numba (us)':>12s} {'speed-up':>9s}")
    for n in args.n:
        for name, a in cases(n):
            f_np, f_nb = getattr(numpy_impl, name), getattr(numba_impl, name)
            r_np, r_nb = f_np(*a), f_nb(*a)
            for u, v in zip(np.atleast_1d(r_np) if not isinstance(r_np, tuple) else r_np,
                            np.atleast_1d(r_nb) if not isinstance(r_nb, tuple) else r_nb):
                assert np.allclose(u, v, rtol=1e-12, atol=1e-12), name
            t_np = timeit(f_np, a, args.repeat)
            t_nb = timeit(f_nb, a, args.repeat)
            print(f"{name:18s} {n:5d} {t_np * 1e6:12.2f} {t_nb * 1e6:12.2f} {t_np / t_nb:9.1f}")


if __name__ == "__main__":
    main()
