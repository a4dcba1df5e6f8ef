"""Benchmark the jitted kernels against the pure-numpy fallbacks.

Run:  python3 benchmarks/bench_kernels.py [--rows 20000] [--dim 30000]

The jitted path is what PGDETECT_NUMBA=1 (default) gives you; the
fallback is what runs under PGDETECT_NUMBA=0. Dense pairwise distances
are timed for reference only: they run on BLAS in both configurations.
"""

import argparse
import time

import numpy as np

from pgdetect import kernels
from pgdetect.kernels import (
    _numpy_csr_grad,
    _numpy_csr_margins,
    backend_name,
    pairwise_sq_dists,
)


def _random_csr(rng, n_rows, dim, nnz_per_row):
    counts = rng.integers(1, nnz_per_row * 2, size=n_rows)
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    nnz = int(indptr[-1])
    indices = rng.integers(0, dim, size=nnz).astype(np.int64)
    values = rng.normal(size=nnz)
    return indptr, indices, values


def _time(fn, *args, repeat=7):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--dim", type=int, default=30_000)
    parser.add_argument("--nnz", type=int, default=40)
    parser.add_argument("--points", type=int, default=600)
    parser.add_argument("--point-dim", type=int, default=256)
    args = parser.parse_args()

    if backend_name() != "numba":
        print("active backend is numpy (numba unavailable or PGDETECT_NUMBA=0);")
        print("timings below compare the fallback against itself.")

    rng = np.random.default_rng(0)
    indptr, indices, values = _random_csr(rng, args.rows, args.dim, args.nnz)
    w = rng.normal(size=args.dim)
    resid = rng.normal(size=args.rows)
    points = rng.normal(size=(args.points, args.point_dim))

    # warm the jit before timing
    kernels.csr_margins(indptr[:3], indices[: indptr[2]], values[: indptr[2]], w, 0.0)
    kernels.csr_grad(indptr[:3], indices[: indptr[2]], values[: indptr[2]], resid[:2], args.dim)

    rows = []
    fast, out_fast = _time(kernels.csr_margins, indptr, indices, values, w, 0.1)
    slow, out_slow = _time(_numpy_csr_margins, indptr, indices, values, w, 0.1)
    assert np.allclose(out_fast, out_slow, atol=1e-9)
    rows.append(("csr_margins", fast, slow))

    fast, out_fast = _time(kernels.csr_grad, indptr, indices, values, resid, args.dim)
    slow, out_slow = _time(_numpy_csr_grad, indptr, indices, values, resid, args.dim)
    assert np.allclose(out_fast, out_slow, atol=1e-9)
    rows.append(("csr_grad", fast, slow))

    print(f"active backend: {backend_name()}")
    print(f"{'kernel':<20} {'active (ms)':>12} {'numpy (ms)':>12} {'speedup':>9}")
    for name, fast, slow in rows:
        print(f"{name:<20} {fast * 1e3:>12.3f} {slow * 1e3:>12.3f} {slow / fast:>8.2f}x")
    blas, _ = _time(pairwise_sq_dists, points)
    print(f"{'pairwise_sq_dists':<20} {blas * 1e3:>12.3f} {'(BLAS, both paths)':>22}")


if __name__ == "__main__":
    main()
