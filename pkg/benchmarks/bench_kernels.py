"""Compare the numba and pure-numpy kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one row per (kernel, m, n, d) with the best-of-``repeat`` wall time
for each backend, the speedup, and the largest absolute difference between
the two outputs.
"""
import argparse
import timeit

import numpy as np

from diffgeo import _kernels

SHAPES = [(1, 200, 2), (2000, 200, 2), (256, 5000, 32), (64, 2000, 3072)]


def _cases(rng):
    for m, n, d in SHAPES:
        X = rng.normal(size=(m, d)) * 3
        P = rng.normal(size=(n, d))
        yield "denoise", (m, n, d), (X, P, 1.5, None)
        yield "logsumexp_kernel", (m, n, d), (X, P, 1.5)
        yield "nearest", (m, n, d), (X, P)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not importable; nothing to compare")
    impls = {"numpy": _kernels.numpy_impl, "numba": _kernels.numba_impl}
    print(f"{'kernel':<18}{'m x n x d':>18}{'numpy ms':>11}{'numba ms':>11}{'speedup':>9}{'max |diff|':>12}")
    for name, shape, call_args in _cases(np.random.default_rng(args.seed)):
        times, outs = {}, {}
        for label, impl in impls.items():
            fn = getattr(impl, name)
            outs[label] = fn(*call_args)  # also triggers JIT compilation
            number = 1
            times[label] = min(timeit.repeat(lambda: fn(*call_args), number=number, repeat=args.repeat)) / number
        diff = float(np.max(np.abs(np.asarray(outs["numpy"], float) - np.asarray(outs["numba"], float))))
        dims = "x".join(map(str, shape))
        print(f"{name:<18}{dims:>18}{times['numpy'] * 1e3:>11.3f}{times['numba'] * 1e3:>11.3f}"
              f"{times['numpy'] / times['numba']:>9.2f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
