"""Compare the compiled and pure-Python Jacobi kernels.

    python benchmarks/bench_svd.py [--repeat 5]

Each kernel orthogonalizes the rows of the same random matrices; the
script prints the median time per call and the speedup.
"""
import argparse
import statistics
import time

import numpy as np

from orthotensor import _jacobi_py, linalg

try:
    from orthotensor._jacobi import jacobi_sweeps as compiled
except ImportError:
    compiled = None

SHAPES = [(4, 4), (8, 16), (16, 64), (32, 256), (64, 64)]


def _time(kernel, A, repeat):
    times = []
    for _ in range(repeat):
        X = np.ascontiguousarray(A, dtype=float).copy()
        Vt = np.eye(A.shape[0])
        t0 = time.perf_counter()
        kernel(X, Vt, linalg.JACOBI_EPS, linalg.MAX_SWEEPS)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled kernel not built; only the Python fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'rows x cols':>12} {'python ms':>11} {'cython ms':>11} {'speedup':>8}")
    for shape in SHAPES:
        A = rng.standard_normal(shape)
        tp = _time(_jacobi_py.jacobi_sweeps, A, args.repeat)
        if compiled is None:
            print(f"{shape[0]:>5} x {shape[1]:<5} {tp * 1e3:11.3f} {'-':>11} {'-':>8}")
            continue
        tc = _time(compiled, A, args.repeat)
        print(f"{shape[0]:>5} x {shape[1]:<5} {tp * 1e3:11.3f} {tc * 1e3:11.3f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
