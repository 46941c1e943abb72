"""Compare the numba and numpy blob-velocity kernels.

    python3 benchmarks/bench_kernels.py [--sizes 500 1000 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from vortexwave import _accel, kernels
from vortexwave.frac_kernel import make_constants


def timed(fn, repeat):
    fn()  # warm-up (jit compile)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000, 2000])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--s", type=float, default=0.75)
    args = ap.parse_args()

    const = make_constants(args.s)
    rng = np.random.default_rng(0)
    print(f"numba available: {_accel.HAVE_NUMBA}")
    print(f"{'N':>6} {'numba [s]':>11} {'numpy [s]':>11} {'speedup':>8} {'max diff':>10}")
    for n in args.sizes:
        pos = rng.normal(size=(n, 2))
        w = rng.uniform(-1.0, 1.0, n) / n
        core2 = np.full(n, 1e-4)

        def run(backend):
            return kernels.self_velocity(pos, w, core2, const.s, const.c2s, backend=backend)

        t_nb = timed(lambda: run("numba"), args.repeat) if _accel.HAVE_NUMBA else float("nan")
        t_np = timed(lambda: run("numpy"), args.repeat)
        diff = np.max(np.abs(run("numba") - run("numpy"))) if _accel.HAVE_NUMBA else float("nan")
        print(f"{n:>6} {t_nb:>11.4f} {t_np:>11.4f} {t_np / t_nb:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
