"""Time the numba kernels against their pure-numpy twins.

Run: python3 benchmarks/bench_kernels.py
The numba column includes a warmup call so JIT compilation is not timed.
"""

import time

import numpy as np

from pias import kernels
from pias._backend import HAVE_NUMBA
from pias.sampling import _direction_matrix
from pias.seeding import rng_from


def _time(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench():
    rng = rng_from(7, "bench")
    rows = []

    d, n = 10, 1 << 14
    V = np.ascontiguousarray(_direction_matrix(d))
    masks = rng.integers(1, 1 << 30, size=d)
    rows.append(("sobol_fill", (V, masks, n, 0)))

    n_pts = 4096
    X = rng.uniform(-4, 4, size=(n_pts, 6))
    ops = np.array([kernels.OP_VAR, kernels.OP_VAR, kernels.OP_ADD,
                    kernels.OP_SINPI, kernels.OP_VAR, kernels.OP_MUL],
                   dtype=np.int64)
    a1 = np.array([-1, -1, 0, 2, -1, 3], dtype=np.int64)
    a2 = np.array([-1, -1, 1, -1, -1, 4], dtype=np.int64)
    cval = np.zeros(6)
    vidx = np.array([0, 3, -1, -1, 5, -1], dtype=np.int64)
    rows.append(("rog_eval", (ops, a1, a2, cval, vidx, X)))

    Xt = rng.uniform(0, 1, size=(800, 5))
    rows.append(("nn_tour", (Xt,)))
    yt = rng.uniform(0, 1, size=800)
    rows.append(("nearest_better", (Xt, yt)))
    rows.append(("mean_pairwise", (Xt,)))

    xs = np.sort(rng.uniform(0, 1, size=4000))
    Y = rng.uniform(0, 1, size=(4000, 8))
    rows.append(("split_scan", (xs, Y, 2)))

    print(f"numba available: {HAVE_NUMBA}")
    print(f"{'kernel':<16}{'numpy (ms)':>12}{'numba (ms)':>12}{'speedup':>9}")
    for name, args in rows:
        f_np = getattr(kernels, f"{name}_np")
        t_np = _time(f_np, *args)
        line = f"{name:<16}{t_np * 1e3:>12.3f}"
        f_nb = getattr(kernels, f"{name}_nb")
        if f_nb is not None:
            f_nb(*args)  # warmup/compile
            t_nb = _time(f_nb, *args)
            line += f"{t_nb * 1e3:>12.3f}{t_np / t_nb:>9.2f}x"
        else:
            line += f"{'n/a':>12}{'':>9}"
        print(line)


if __name__ == "__main__":
    bench()
