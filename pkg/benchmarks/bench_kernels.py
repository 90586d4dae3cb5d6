"""Compiled kernels vs the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the two hot paths (min-norm-point projection onto a vertex set and the
double-bracket descent) on both backends and checks that they agree.
"""
import argparse
import time

import numpy as np

from momentpoly import _pykernels, kernels
from momentpoly.orbit import OrbitProblem, sample_array


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_projection(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for d, nv, nx in ((2, 20, 2000), (3, 40, 2000), (4, 80, 1000)):
        V = rng.standard_normal((nv, d))
        X = 3 * rng.standard_normal((nx, d))
        tc, (_, dc) = best_of(lambda: kernels.project_points(V, X), repeat)
        tp, (_, dp) = best_of(lambda: _pykernels.project_points(V, X), repeat)
        rows.append((f"project d={d} |V|={nv} points={nx}", tc, tp, float(np.max(np.abs(dc - dp)))))
    return rows


def bench_flow(repeat):
    rows = []
    for spectra in ([[1, 0], [1, 0]], [[2, 1, 0], [2, 1, 0]], [[3, 1, 0, -1], [2, 1, 0, -2], [1, 0, -1, -3]]):
        p = OrbitProblem(spectra)
        starts = sample_array(p, 1, 20)

        def run(fn):
            return [fn(A)[1][-1] for A in starts]

        tc, fc = best_of(lambda: run(lambda A: kernels.double_bracket_descent(A, tol=1e-10)), repeat)
        tp, fp = best_of(lambda: run(lambda A: _pykernels.double_bracket_descent(A, 0.1, 1e-10, 100000, 0.5, 1.5, 10.0, True)), repeat)
        rows.append((f"flow n={p.n} k={p.k} x20 starts", tc, tp, float(np.max(np.abs(np.subtract(fc, fp))))))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.BACKEND != "cython":
        print("compiled kernels unavailable: only the numpy backend can be timed")
    print(f"backend: {kernels.BACKEND}")
    print(f"{'case':42s} {'compiled[s]':>12s} {'numpy[s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, tc, tp, diff in bench_projection(args.repeat) + bench_flow(args.repeat):
        print(f"{name:42s} {tc:12.4f} {tp:10.4f} {tp / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
