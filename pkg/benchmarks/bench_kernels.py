"""Compare the compiled and numpy Kennard-Stone kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--sizes 200,1000,3000] [--channels 700] [--repeat 3]

Prints the best-of-``repeat`` wall time for each backend, the speed-up,
and whether both backends selected the same samples.
"""

import argparse
import time

import numpy as np

from spectral_transfer import kernels


def run(backend, X, n_select):
    first, second = backend.max_distance_pair(X)
    return list(backend.maximin_select(X, int(first), int(second), n_select))


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="200,1000,3000")
    parser.add_argument("--channels", type=int, default=700)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if kernels.compiled_backend is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'N':>6} {'d':>5} {'select':>7} {'cython [s]':>11} {'numpy [s]':>10} {'speed-up':>9} same")
    for n in (int(s) for s in args.sizes.split(",")):
        X = np.ascontiguousarray(rng.normal(size=(n, args.channels)).cumsum(axis=1))
        k = max(2, int(0.75 * n))
        tc, sel_c = best_time(lambda: run(kernels.compiled_backend, X, k), args.repeat)
        tp, sel_p = best_time(lambda: run(kernels.python_backend, X, k), args.repeat)
        print(f"{n:>6} {args.channels:>5} {k:>7} {tc:>11.4f} {tp:>10.4f} {tp / tc:>8.1f}x "
              f"{'yes' if sel_c == sel_p else 'NO'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
