"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The jitted path is used automatically when numba imports; set
``PGDETECT_NUMBA=0`` in the environment to force the numpy fallback
(useful for debugging or on platforms where numba is unavailable).
``benchmarks/bench_kernels.py`` compares the two paths.

Only the sparse row kernels are jitted: they are irregular loops numpy
cannot vectorize without scatter temporaries. Dense pairwise distances
are matmul-shaped and stay on BLAS in both paths (a jitted triple loop
benchmarked ~10x slower at the sizes this package sees).
"""

from __future__ import annotations

import os

import numpy as np


def _numpy_csr_margins(indptr, indices, values, weights, bias):
    n = indptr.shape[0] - 1
    out = np.full(n, bias, dtype=np.float64)
    counts = np.diff(indptr)
    rows = np.repeat(np.arange(n), counts)
    np.add.at(out, rows, values * weights[indices])
    return out


def _numpy_csr_grad(indptr, indices, values, residuals, dim):
    grad = np.zeros(dim, dtype=np.float64)
    counts = np.diff(indptr)
    per_elem = np.repeat(residuals, counts) * values
    np.add.at(grad, indices, per_elem)
    return grad


def pairwise_sq_dists(points):
    """Squared Euclidean distances between all row pairs (BLAS path)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    sq = np.einsum("ij,ij->i", points, points)
    dists = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(dists, 0.0, out=dists)
    np.fill_diagonal(dists, 0.0)
    return dists


_FORCE_NUMPY = os.environ.get("PGDETECT_NUMBA", "1").lower() in ("0", "false", "off")

if not _FORCE_NUMPY:
    try:
        from numba import njit
    except ImportError:
        _FORCE_NUMPY = True

if _FORCE_NUMPY:
    BACKEND = "numpy"
    csr_margins = _numpy_csr_margins
    csr_grad = _numpy_csr_grad
else:
    BACKEND = "numba"

    @njit(cache=True)
    def _numba_csr_margins(indptr, indices, values, weights, bias):
        n = indptr.shape[0] - 1
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            acc = bias
            for j in range(indptr[i], indptr[i + 1]):
                acc += values[j] * weights[indices[j]]
            out[i] = acc
        return out

    @njit(cache=True)
    def _numba_csr_grad(indptr, indices, values, residuals, dim):
        grad = np.zeros(dim, dtype=np.float64)
        n = indptr.shape[0] - 1
        for i in range(n):
            r = residuals[i]
            for j in range(indptr[i], indptr[i + 1]):
                grad[indices[j]] += values[j] * r
        return grad

    csr_margins = _numba_csr_margins
    csr_grad = _numba_csr_grad


def backend_name() -> str:
    """Active kernel backend, recorded in experiment manifests."""
    return BACKEND


def build_csr(vectors, dim):
    """Pack an iterable of (indices, values) pairs into CSR arrays."""
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    chunks_idx = []
    chunks_val = []
    for i, vec in enumerate(vectors):
        idx = np.asarray(vec.indices, dtype=np.int64)
        if idx.size and int(idx.max()) >= dim:
            raise ValueError(f"vector index {int(idx.max())} out of range for dim {dim}")
        chunks_idx.append(idx)
        chunks_val.append(np.asarray(vec.values, dtype=np.float64))
        indptr[i + 1] = indptr[i] + idx.size
    if chunks_idx:
        indices = np.concatenate(chunks_idx)
        values = np.concatenate(chunks_val)
    else:
        indices = np.zeros(0, dtype=np.int64)
        values = np.zeros(0, dtype=np.float64)
    return indptr, indices, values
